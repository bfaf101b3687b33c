#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace nds {

struct CriterionResult {
    int id = 0;
    std::string name;
    bool pass = false;
    std::string detail;
};

/// Runs every acceptance criterion with its pinned tolerances. The output is
/// deterministic: timing bounds affect pass/fail but are not printed.
std::vector<CriterionResult> run_acceptance();

/// Single criterion by id (1..11).
CriterionResult run_criterion(int id);

/// "PASS  3 radii-summability: ..." one line per criterion, then a summary line.
void print_acceptance(std::ostream& os, const std::vector<CriterionResult>& results);

}  // namespace nds
