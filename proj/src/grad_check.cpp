#include "wkbp/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "wkbp/rng.hpp"

namespace wkbp {

GradCheckReport grad_check(const LossBuilder& f, ParamStore& params, double eps,
                           int max_coords_per_tensor, std::uint64_t seed) {
    // Analytic pass.
    Tape tape;
    std::vector<int> ids = params.bind(tape);
    int loss = f(tape, ids);
    tape.backward(loss);

    std::vector<Tensor> analytic;
    analytic.reserve(ids.size());
    for (int id : ids) analytic.push_back(tape.grad(id));

    auto eval = [&](void) -> double {
        Tape t;
        std::vector<int> bound = params.bind(t);
        return t.value(f(t, bound))[0];
    };

    Rng rng(seed);
    GradCheckReport report;
    for (std::size_t p = 0; p < params.size(); ++p) {
        Tensor& theta = params.value_at(p);
        std::vector<int> coords;
        if (max_coords_per_tensor > 0 && theta.size() > max_coords_per_tensor) {
            for (int k = 0; k < max_coords_per_tensor; ++k)
                coords.push_back(static_cast<int>(rng.index(static_cast<std::size_t>(theta.size()))));
            std::sort(coords.begin(), coords.end());
            coords.erase(std::unique(coords.begin(), coords.end()), coords.end());
        } else {
            coords.resize(static_cast<std::size_t>(theta.size()));
            for (int k = 0; k < theta.size(); ++k) coords[static_cast<std::size_t>(k)] = k;
        }

        for (int k : coords) {
            double orig = theta[k];
            theta[k] = orig + eps;
            double up = eval();
            theta[k] = orig - eps;
            double down = eval();
            theta[k] = orig;

            double g_fd = (up - down) / (2.0 * eps);
            double g_an = analytic[p][k];
            double rel = std::abs(g_an - g_fd) / std::max(1e-8, std::abs(g_an) + std::abs(g_fd));
            ++report.n_checked;
            if (rel > report.max_rel_err) {
                report.max_rel_err = rel;
                report.worst_param = params.names()[p];
                report.worst_index = k;
            }
        }
    }
    return report;
}

} // namespace wkbp
