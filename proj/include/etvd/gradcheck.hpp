#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace etvd {

// Central finite differences (h = 1e-5, double precision) against every
// analytic backward pass. The numeric side only ever evaluates forward
// functions, so it stays an independent oracle for the code it checks.

struct GradCheckCase {
    std::string name;
    double max_rel_err = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

struct GradCheckReport {
    std::vector<GradCheckCase> cases;
    bool all_pass = true;
};

enum class GradCheckScope { kLayer, kNetwork, kLoss, kAll };

// seeds_per_case independent random restarts per case. corrupt_first is a
// test hook that perturbs one analytic gradient entry so the harness can be
// shown to catch a wrong gradient.
GradCheckReport run_gradcheck(GradCheckScope scope, uint64_t seed, int seeds_per_case,
                              bool corrupt_first = false);

// max_i |a_i - n_i| / max(|a_i|, |n_i|, floor); the floor keeps near-zero
// entries from turning finite-difference noise into spurious failures.
double max_rel_error(const std::vector<double>& analytic, const std::vector<double>& numeric,
                     double floor = 1e-3);

}  // namespace etvd
