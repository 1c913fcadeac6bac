#ifndef DLR_INTERP_PLAN_HPP
#define DLR_INTERP_PLAN_HPP

#include <vector>

#include "dlr/common.hpp"

namespace dlr {

// One output position of a 1D linear interpolation/extrapolation pass:
// value = (1-w) * pilot[lo] + w * pilot[hi]. Exact pilot hits are encoded as
// lo == hi so they copy the pilot value bit-for-bit. Positions outside the
// pilot span keep the two nearest pilots and a weight outside [0, 1], which
// extrapolates linearly and reproduces affine fields everywhere.
struct InterpTap {
    int lo = 0;
    int hi = 0;
    double w = 0.0;
};

inline std::vector<InterpTap> make_interp_taps(const std::vector<int>& pilots, int out_len) {
    const int p = static_cast<int>(pilots.size());
    require(p >= 1, ErrorCode::invalid_argument, "interp: no pilot positions");
    for (int i = 1; i < p; ++i)
        require(pilots[i] > pilots[i - 1], ErrorCode::invalid_argument,
                "interp: pilot positions must be strictly increasing");
    require(pilots.front() >= 0 && pilots.back() < out_len, ErrorCode::invalid_argument,
            "interp: pilot position out of range");

    std::vector<InterpTap> taps(static_cast<std::size_t>(out_len));
    int seg = 0; // largest j <= p-2 with pilots[j] <= x (0 while x < pilots[0])
    for (int x = 0; x < out_len; ++x) {
        InterpTap t;
        if (p == 1) {
            taps[x] = t; // constant extension from the single pilot
            continue;
        }
        while (seg < p - 2 && pilots[seg + 1] <= x) ++seg;
        if (x == pilots[seg]) {
            t.lo = t.hi = seg;
        } else if (x == pilots[seg + 1]) {
            t.lo = t.hi = seg + 1;
        } else {
            t.lo = seg;
            t.hi = seg + 1;
            t.w = static_cast<double>(x - pilots[seg]) /
                  static_cast<double>(pilots[seg + 1] - pilots[seg]);
        }
        taps[x] = t;
    }
    return taps;
}

// Separable plan for reconstructing a full grid from the pilot sub-grid:
// frequency pass first, then time.
struct InterpPlan {
    std::vector<InterpTap> freq; // size = full freq bins
    std::vector<InterpTap> time; // size = full time slots
};

} // namespace dlr

#endif
