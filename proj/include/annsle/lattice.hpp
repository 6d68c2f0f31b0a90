#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <vector>

#include "annsle/core.hpp"

namespace annsle {

struct LatticePoint {
    int x = 0;
    int y = 0;
    auto operator<=>(const LatticePoint&) const = default;
};

// Finite 4-neighbor subgraph of Z^2; the walk dies on stepping outside.
class LatticeDomain {
public:
    explicit LatticeDomain(std::vector<LatticePoint> sites);
    static LatticeDomain rectangle(int w, int h); // {0..w-1} x {0..h-1}

    std::size_t size() const { return sites_.size(); }
    const std::vector<LatticePoint>& sites() const { return sites_; }
    bool contains(LatticePoint pt) const { return index_.count(pt) != 0; }
    int index_of(LatticePoint pt) const; // -1 if absent
    LatticeDomain without(const std::set<LatticePoint>& removed) const;

    // Spectral radius of Q = (1/4) * adjacency, by power iteration.
    double q_spectral_radius() const;

private:
    std::vector<LatticePoint> sites_;
    std::map<LatticePoint, int> index_;
};

// Nearest-neighbor path with no repeated vertex.
struct Saw {
    std::vector<LatticePoint> vertices;
    bool valid() const;
    std::size_t steps() const { return vertices.empty() ? 0 : vertices.size() - 1; }
};

// Rotation class of a closed walk; reflection is NOT quotiented.
struct UnrootedLoop {
    std::vector<LatticePoint> vertices; // least-rotation representative, length n
    int multiplicity = 0;               // number of distinct rooted rotations
    double weight() const;              // multiplicity * 4^{-n} / n
};

// All unrooted loops of length <= max_len staying in D.
std::vector<UnrootedLoop> enumerate_unrooted_loops(const LatticeDomain& D, int max_len);

struct LoopEnumeration {
    double measure = 0.0;     // sum of unrooted-loop weights, loops hitting hit_set
    double tail_bound = 0.0;  // certified bound on omitted longer loops
    std::int64_t n_walks = 0; // rooted closed walks counted
};

// Direct walk-count route: sum over rooted closed walks of 4^{-n}/n with a
// hit indicator (equals the unrooted measure since every rooted rotation
// appears exactly once).  Tail from the spectral radius of Q.
LoopEnumeration loop_measure_enumerate(const LatticeDomain& D,
                                       const std::set<LatticePoint>& hit_set, int max_len);

// Determinant route: log det(I - Q_{D \ hit_set}) - log det(I - Q_D) >= 0.
double loop_measure_det(const LatticeDomain& D, const std::set<LatticePoint>& hit_set);

struct SawZ {
    double Z = 0.0;
    std::int64_t n_saws = 0;
    bool truncated = false; // some SAW was cut off by max_len
};

// Z = sum over SAWs omega from z to w, |omega| <= max_len, of
// exp{-beta |omega| + lambda m^RW(omega, D)} with m^RW by loop_measure_det.
SawZ lambda_saw_Z(const LatticeDomain& D, LatticePoint z, LatticePoint w, double beta,
                  double lambda, int max_len);

// exp{(c/2) [m^RW(omega, D) - m^RW(omega, D1)]} for omega inside D1 c D.
double boundary_perturbation_ratio(const LatticeDomain& D, const LatticeDomain& D1,
                                   const Saw& omega, const SleParams& p);

// 0 if any two paths intersect; else
// exp{(c/2) sum_{j>=2} m^RW(loops hitting path_j and path_1 u ... u path_{j-1})},
// each term by inclusion-exclusion of determinant evaluations.
double multi_path_weight(const std::vector<Saw>& paths, const LatticeDomain& D,
                         const SleParams& p);

struct LerwCheck {
    double max_deviation = 0.0;    // worst |4^{-|w|} e^{m} - Green-product P(w)|
    double total_probability = 0.0; // sum of 4^{-|w|} e^{m} over all exits (should be 1)
    std::int64_t n_saws = 0;
};

// Loop-erased random walk identity at c = -2: for every self-avoiding path
// from z through D to a first exit step, 4^{-|w|} exp{m^RW(w, D)} equals the
// probability that loop-erased simple random walk from z traces it.  The
// Green-function product route solves linear systems (no determinants) and
// the probabilities must additionally sum to 1.
LerwCheck lerw_check(const LatticeDomain& D, LatticePoint z);

} // namespace annsle
