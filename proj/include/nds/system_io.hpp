#pragma once

#include <string>

#include "nds/sim.hpp"

namespace nds {

/// Parses the JSON system description. Keys: n, p (optional), a_minus1,
/// a0 (optional pointwise term, lifted), a2 and a3 (lists of polynomial
/// coefficient matrices), b (optional n x p). Entries are numbers or [re, im].
/// Errors carry the line number of the offending key.
NeutralSystem parse_system(const std::string& text);

NeutralSystem load_system(const std::string& path);

std::string format_system(const NeutralSystem& sys);

/// History CSV: theta, then Re/Im of each z component, then Re/Im of each z'
/// component; M + 1 rows on the grid theta_i = -1 + i/M. '#' lines and a
/// non-numeric header row are skipped.
History load_history(const std::string& path, Eigen::Index n, int grid_m);

}  // namespace nds
