// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>

#include "fedopt/errors.hpp"

namespace fedopt {

enum class LrScheduleKind { constant, cosine };

struct LrSchedule {
    LrScheduleKind kind = LrScheduleKind::constant;
    double eta_min = 0.0;
};

// Per-round learning rate. The cosine schedule runs from eta0 at round 0 to
// exactly eta_min at round R-1; the endpoint is pinned rather than left to
// floating-point cos.
inline double effective_eta(const LrSchedule& s, double eta0, int round, int total_rounds) {
    if (s.kind == LrScheduleKind::constant) return eta0;
    if (!(s.eta_min >= 0.0) || s.eta_min > eta0)
        throw ConfigError("lr_schedule.eta_min must be in [0, eta]");
    if (total_rounds <= 1) return eta0;
    if (round >= total_rounds - 1) return s.eta_min;
    const double phase = M_PI * static_cast<double>(round) / static_cast<double>(total_rounds - 1);
    return s.eta_min + (eta0 - s.eta_min) * 0.5 * (1.0 + std::cos(phase));
}

}  // namespace fedopt
