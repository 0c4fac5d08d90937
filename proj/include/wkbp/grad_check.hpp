#pragma once

#include <functional>
#include <string>

#include "wkbp/tape.hpp"

namespace wkbp {

// Builds a scalar loss on the tape from parameters bound as leaves (ids
// aligned with ParamStore slots) and returns the loss node id.
using LossBuilder = std::function<int(Tape&, const std::vector<int>&)>;

struct GradCheckReport {
    double max_rel_err = 0.0;
    std::string worst_param;
    int worst_index = -1;
    int n_checked = 0;
};

// Compares reverse-mode gradients against central finite differences:
//   rel_err = |g_an - g_fd| / max(1e-8, |g_an| + |g_fd|).
// When max_coords_per_tensor > 0, only that many coordinates per tensor
// are probed (deterministically sampled from `seed`); large models are
// otherwise too slow to difference exhaustively.
GradCheckReport grad_check(const LossBuilder& f, ParamStore& params, double eps = 1e-5,
                           int max_coords_per_tensor = -1, std::uint64_t seed = 0);

} // namespace wkbp
