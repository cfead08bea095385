#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "rtrunc/common.hpp"
#include "rtrunc/mps.hpp"
#include "rtrunc/powerlaw.hpp"

namespace rtrunc::io {

inline constexpr const char* kCsvHeader = "# rtrunc-csv v1";

/// Parses a state from JSON text. Accepted shapes: a flat array of reals, an
/// array of [re, im] pairs, or an object whose "v" (or "state") member is one
/// of those. Optional "a" and "b" members give bipartite dimensions; a
/// "matrix" member (array of rows) gives a matrixized bipartite state.
struct StateInput
{
    CVec v;
    int a = 0; ///< 0 when absent
    int b = 0;
};

StateInput parse_state(const std::string& json_text);
StateInput read_state(const std::string& path);

std::string read_file(const std::string& path);

/// Reads an MPS experiment config; absent members keep their defaults.
mps::ExperimentConfig parse_experiment_config(const std::string& json_text);
powerlaw::SweepConfig parse_sweep_config(const std::string& json_text);

/// Versioned CSV writers. Numbers use 17 significant digits.
void write_matrix_csv(std::ostream& os, const RMat& m);
void write_matrix_csv(std::ostream& os, const CMat& m); ///< re,im column pairs
void write_sweep_csv(std::ostream& os, const std::vector<powerlaw::SweepRow>& rows);
void write_experiment_csv(std::ostream& os, const std::vector<mps::ExperimentRecord>& rows);

/// Writes to `path`, or stdout when path is "-".
void write_text(const std::string& path, const std::string& text);

std::string format_double(double x);

} // namespace rtrunc::io
