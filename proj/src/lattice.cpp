#include "annsle/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

namespace annsle {

namespace {

constexpr int kDx[4] = {1, -1, 0, 0};
constexpr int kDy[4] = {0, 0, 1, -1};

std::vector<double> build_I_minus_Q(const LatticeDomain& D) {
    std::size_t n = D.size();
    std::vector<double> m(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        m[i * n + i] = 1.0;
        LatticePoint pt = D.sites()[i];
        for (int d = 0; d < 4; ++d) {
            int j = D.index_of({pt.x + kDx[d], pt.y + kDy[d]});
            if (j >= 0) m[i * n + j] -= 0.25;
        }
    }
    return m;
}

// In-place LU with partial pivoting; returns log det (throws if singular).
double lu_log_det(std::vector<double>& m, std::size_t n) {
    double log_det = 0.0;
    int sign = 1;
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t row = col + 1; row < n; ++row) {
            if (std::abs(m[row * n + col]) > std::abs(m[piv * n + col])) piv = row;
        }
        double pv = m[piv * n + col];
        if (std::abs(pv) < 1e-14) throw std::runtime_error("loop_measure_det: singular matrix");
        if (piv != col) {
            for (std::size_t k = 0; k < n; ++k) std::swap(m[piv * n + k], m[col * n + k]);
            sign = -sign;
        }
        pv = m[col * n + col];
        log_det += std::log(std::abs(pv));
        if (pv < 0.0) sign = -sign;
        for (std::size_t row = col + 1; row < n; ++row) {
            double f = m[row * n + col] / pv;
            if (f == 0.0) continue;
            for (std::size_t k = col; k < n; ++k) m[row * n + k] -= f * m[col * n + k];
        }
    }
    if (sign < 0) throw std::runtime_error("loop_measure_det: negative determinant");
    return log_det;
}

double log_det_I_minus_Q(const LatticeDomain& D) {
    if (D.size() == 0) return 0.0;
    std::vector<double> m = build_I_minus_Q(D);
    return lu_log_det(m, D.size());
}

// Solve (I - Q_D) g = e_src and return g[src] = G_D(src, src).
double green_diagonal(const LatticeDomain& D, LatticePoint src) {
    std::size_t n = D.size();
    int si = D.index_of(src);
    if (si < 0) throw std::invalid_argument("green_diagonal: point outside domain");
    std::vector<double> m = build_I_minus_Q(D);
    std::vector<double> rhs(n, 0.0);
    rhs[si] = 1.0;
    // Gaussian elimination with partial pivoting
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t row = col + 1; row < n; ++row) {
            if (std::abs(m[row * n + col]) > std::abs(m[piv * n + col])) piv = row;
        }
        if (std::abs(m[piv * n + col]) < 1e-14) {
            throw std::runtime_error("green_diagonal: singular matrix");
        }
        if (piv != col) {
            for (std::size_t k = 0; k < n; ++k) std::swap(m[piv * n + k], m[col * n + k]);
            std::swap(rhs[piv], rhs[col]);
        }
        double pv = m[col * n + col];
        for (std::size_t row = col + 1; row < n; ++row) {
            double f = m[row * n + col] / pv;
            if (f == 0.0) continue;
            for (std::size_t k = col; k < n; ++k) m[row * n + k] -= f * m[col * n + k];
            rhs[row] -= f * rhs[col];
        }
    }
    std::vector<double> g(n, 0.0);
    for (std::size_t row = n; row-- > 0;) {
        double s = rhs[row];
        for (std::size_t k = row + 1; k < n; ++k) s -= m[row * n + k] * g[k];
        g[row] = s / m[row * n + row];
    }
    return g[static_cast<std::size_t>(si)];
}

} // namespace

LatticeDomain::LatticeDomain(std::vector<LatticePoint> sites) : sites_(std::move(sites)) {
    std::sort(sites_.begin(), sites_.end());
    sites_.erase(std::unique(sites_.begin(), sites_.end()), sites_.end());
    for (std::size_t i = 0; i < sites_.size(); ++i) index_[sites_[i]] = static_cast<int>(i);
}

LatticeDomain LatticeDomain::rectangle(int w, int h) {
    if (w < 1 || h < 1) throw std::invalid_argument("LatticeDomain: empty rectangle");
    std::vector<LatticePoint> pts;
    pts.reserve(static_cast<std::size_t>(w) * h);
    for (int x = 0; x < w; ++x) {
        for (int y = 0; y < h; ++y) pts.push_back({x, y});
    }
    return LatticeDomain(std::move(pts));
}

int LatticeDomain::index_of(LatticePoint pt) const {
    auto it = index_.find(pt);
    return it == index_.end() ? -1 : it->second;
}

LatticeDomain LatticeDomain::without(const std::set<LatticePoint>& removed) const {
    std::vector<LatticePoint> pts;
    for (const LatticePoint& pt : sites_) {
        if (removed.count(pt) == 0) pts.push_back(pt);
    }
    return LatticeDomain(std::move(pts));
}

double LatticeDomain::q_spectral_radius() const {
    std::size_t n = size();
    if (n == 0) return 0.0;
    std::vector<double> v(n, 1.0 / std::sqrt(static_cast<double>(n))), w(n);
    double lam = 0.0;
    for (int it = 0; it < 500; ++it) {
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            LatticePoint pt = sites_[i];
            for (int d = 0; d < 4; ++d) {
                int j = index_of({pt.x + kDx[d], pt.y + kDy[d]});
                if (j >= 0) s += 0.25 * v[j];
            }
            w[i] = s;
        }
        double norm = 0.0;
        for (double x : w) norm += x * x;
        norm = std::sqrt(norm);
        if (norm == 0.0) return 0.0;
        double prev = lam;
        lam = norm;
        for (std::size_t i = 0; i < n; ++i) v[i] = w[i] / norm;
        if (it > 10 && std::abs(lam - prev) < 1e-14) break;
    }
    return lam;
}

bool Saw::valid() const {
    if (vertices.empty()) return false;
    for (std::size_t i = 0; i + 1 < vertices.size(); ++i) {
        int dx = vertices[i + 1].x - vertices[i].x;
        int dy = vertices[i + 1].y - vertices[i].y;
        if (std::abs(dx) + std::abs(dy) != 1) return false;
    }
    std::vector<LatticePoint> s = vertices;
    std::sort(s.begin(), s.end());
    return std::adjacent_find(s.begin(), s.end()) == s.end();
}

double UnrootedLoop::weight() const {
    std::size_t n = vertices.size();
    return multiplicity * std::pow(0.25, static_cast<double>(n)) / static_cast<double>(n);
}

namespace {

// Visit every closed walk (as a rooted vertex sequence of length n <= max_len,
// eta_0 ... eta_{n-1} with eta_{n-1} adjacent to eta_0 closing the loop).
void for_each_closed_walk(const LatticeDomain& D, int max_len,
                          const std::function<void(const std::vector<LatticePoint>&)>& emit) {
    std::vector<LatticePoint> walk;
    std::function<void(LatticePoint)> extend = [&](LatticePoint at) {
        walk.push_back(at);
        int n = static_cast<int>(walk.size());
        if (n >= 2) {
            int dx = at.x - walk.front().x, dy = at.y - walk.front().y;
            if (std::abs(dx) + std::abs(dy) == 1) emit(walk);
        }
        if (n < max_len) {
            for (int d = 0; d < 4; ++d) {
                LatticePoint nxt{at.x + kDx[d], at.y + kDy[d]};
                if (D.contains(nxt)) extend(nxt);
            }
        }
        walk.pop_back();
    };
    for (const LatticePoint& s : D.sites()) extend(s);
}

std::vector<LatticePoint> least_rotation(const std::vector<LatticePoint>& seq) {
    std::vector<LatticePoint> best = seq;
    std::vector<LatticePoint> rot = seq;
    for (std::size_t k = 1; k < seq.size(); ++k) {
        std::rotate(rot.begin(), rot.begin() + 1, rot.end());
        if (rot < best) best = rot;
    }
    return best;
}

} // namespace

std::vector<UnrootedLoop> enumerate_unrooted_loops(const LatticeDomain& D, int max_len) {
    if (max_len < 2 || max_len % 2 != 0) {
        throw std::invalid_argument("enumerate_unrooted_loops: max_len must be even, >= 2");
    }
    // walks close with one extra implicit step back to the root
    std::map<std::vector<LatticePoint>, int> classes;
    for_each_closed_walk(D, max_len, [&](const std::vector<LatticePoint>& walk) {
        classes[least_rotation(walk)] += 1;
    });
    std::vector<UnrootedLoop> out;
    out.reserve(classes.size());
    for (auto& [canon, count] : classes) out.push_back({canon, count});
    return out;
}

LoopEnumeration loop_measure_enumerate(const LatticeDomain& D,
                                       const std::set<LatticePoint>& hit_set, int max_len) {
    if (max_len < 2 || max_len % 2 != 0) {
        throw std::invalid_argument("loop_measure_enumerate: max_len must be even, >= 2");
    }
    LoopEnumeration out;
    for_each_closed_walk(D, max_len, [&](const std::vector<LatticePoint>& walk) {
        out.n_walks += 1;
        bool hit = false;
        for (const LatticePoint& pt : walk) {
            if (hit_set.count(pt) != 0) {
                hit = true;
                break;
            }
        }
        if (!hit) return;
        auto n = static_cast<double>(walk.size());
        out.measure += std::pow(0.25, n) / n;
    });
    double rho = D.q_spectral_radius();
    double L = max_len;
    if (rho < 1.0) {
        out.tail_bound = static_cast<double>(D.size()) * std::pow(rho, L + 2.0) /
                         ((L + 2.0) * (1.0 - rho * rho));
    } else {
        throw std::runtime_error("loop_measure_enumerate: spectral radius >= 1");
    }
    return out;
}

double loop_measure_det(const LatticeDomain& D, const std::set<LatticePoint>& hit_set) {
    return log_det_I_minus_Q(D.without(hit_set)) - log_det_I_minus_Q(D);
}

SawZ lambda_saw_Z(const LatticeDomain& D, LatticePoint z, LatticePoint w, double beta,
                  double lambda, int max_len) {
    if (!D.contains(z) || !D.contains(w) || z == w) {
        throw std::invalid_argument("lambda_saw_Z: need distinct z, w inside D");
    }
    double base = log_det_I_minus_Q(D);
    SawZ out;
    std::set<LatticePoint> visited;
    std::vector<LatticePoint> path;
    std::function<void(LatticePoint)> extend = [&](LatticePoint at) {
        visited.insert(at);
        path.push_back(at);
        if (at == w) {
            double m = log_det_I_minus_Q(D.without(visited)) - base;
            out.Z += std::exp(-beta * static_cast<double>(path.size() - 1) + lambda * m);
            out.n_saws += 1;
        } else if (static_cast<int>(path.size() - 1) < max_len) {
            for (int d = 0; d < 4; ++d) {
                LatticePoint nxt{at.x + kDx[d], at.y + kDy[d]};
                if (D.contains(nxt) && visited.count(nxt) == 0) extend(nxt);
            }
        } else {
            out.truncated = true;
        }
        path.pop_back();
        visited.erase(at);
    };
    extend(z);
    return out;
}

double boundary_perturbation_ratio(const LatticeDomain& D, const LatticeDomain& D1,
                                   const Saw& omega, const SleParams& p) {
    if (!omega.valid()) throw std::invalid_argument("boundary_perturbation_ratio: invalid path");
    std::set<LatticePoint> pts(omega.vertices.begin(), omega.vertices.end());
    for (const LatticePoint& pt : pts) {
        if (!D1.contains(pt)) {
            throw std::invalid_argument("boundary_perturbation_ratio: path exits D1");
        }
        if (!D.contains(pt)) {
            throw std::invalid_argument("boundary_perturbation_ratio: path exits D");
        }
    }
    double m_big = loop_measure_det(D, pts);
    double m_small = loop_measure_det(D1, pts);
    return std::exp((p.c / 2.0) * (m_big - m_small));
}

double multi_path_weight(const std::vector<Saw>& paths, const LatticeDomain& D,
                         const SleParams& p) {
    std::vector<std::set<LatticePoint>> sets;
    for (const Saw& s : paths) {
        if (!s.valid()) throw std::invalid_argument("multi_path_weight: invalid path");
        sets.emplace_back(s.vertices.begin(), s.vertices.end());
    }
    for (std::size_t i = 0; i < sets.size(); ++i) {
        for (std::size_t j = i + 1; j < sets.size(); ++j) {
            for (const LatticePoint& pt : sets[i]) {
                if (sets[j].count(pt) != 0) return 0.0;
            }
        }
    }
    if (sets.size() < 2) return 1.0;
    double total = 0.0;
    std::set<LatticePoint> prior = sets[0];
    for (std::size_t j = 1; j < sets.size(); ++j) {
        // m(hit new and prior) = m(new) + m(prior) - m(new u prior)
        std::set<LatticePoint> both = prior;
        both.insert(sets[j].begin(), sets[j].end());
        total += loop_measure_det(D, sets[j]) + loop_measure_det(D, prior) -
                 loop_measure_det(D, both);
        prior = std::move(both);
    }
    return std::exp((p.c / 2.0) * total);
}

LerwCheck lerw_check(const LatticeDomain& D, LatticePoint z) {
    if (!D.contains(z)) throw std::invalid_argument("lerw_check: z outside D");
    double base = log_det_I_minus_Q(D);
    LerwCheck out;
    std::set<LatticePoint> visited;
    std::vector<LatticePoint> path;
    std::vector<double> green_product{1.0};
    std::function<void(LatticePoint)> extend = [&](LatticePoint at) {
        // Green diagonal in the domain with the earlier vertices removed
        LatticeDomain sub = D.without(visited);
        double g = green_diagonal(sub, at);
        green_product.push_back(green_product.back() * g);
        visited.insert(at);
        path.push_back(at);

        int n_exits = 0;
        for (int d = 0; d < 4; ++d) {
            LatticePoint nxt{at.x + kDx[d], at.y + kDy[d]};
            if (!D.contains(nxt)) ++n_exits;
        }
        if (n_exits > 0) {
            // the trace [path, exit]: |w| = path.size() steps in total
            double m = log_det_I_minus_Q(D.without(visited)) - base;
            double det_route = std::pow(0.25, static_cast<double>(path.size())) * std::exp(m);
            double green_route =
                std::pow(0.25, static_cast<double>(path.size())) * green_product.back();
            out.max_deviation = std::max(out.max_deviation, std::abs(det_route - green_route));
            out.total_probability += n_exits * det_route;
            out.n_saws += n_exits;
        }
        for (int d = 0; d < 4; ++d) {
            LatticePoint nxt{at.x + kDx[d], at.y + kDy[d]};
            if (D.contains(nxt) && visited.count(nxt) == 0) extend(nxt);
        }
        path.pop_back();
        visited.erase(at);
        green_product.pop_back();
    };
    extend(z);
    return out;
}

} // namespace annsle
