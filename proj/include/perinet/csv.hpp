#pragma once

#include <string>
#include <vector>

#include "perinet/model.hpp"
#include "perinet/network.hpp"

namespace perinet {

// Count table `t,<node names...>` with one row per time step; the t column
// must advance by one per row and supplies t0. Cells are nonnegative
// integers; parse errors name the offending row and column.
CountSeries load_counts(const std::string& path);

// Writes the same shape back: LF line endings, no padding, node names from
// the series (node_1..node_d when absent). load(write(s)) reproduces s and
// write(load(f)) reproduces a file in this canonical form byte for byte.
void write_counts(const std::string& path, const CountSeries& series);

// Sibling table of the recorded intensities; requires them present.
void write_intensities(const std::string& path, const CountSeries& series);

// Edge list `src,dst` over node names or 1-based indices. Without a given
// name list, a file of names assigns indices by first appearance and must
// mention exactly `dimension` distinct nodes. symmetric inserts both
// directions of every row. Self-loops and unknown names are errors.
NetworkSpec load_adjacency(const std::string& path, int dimension, bool symmetric = false,
                           std::vector<std::string> names = {});

// Every directed edge, sorted by source then destination, using the
// network's node names when it has them.
void write_adjacency(const std::string& path, const NetworkSpec& net);

// Generic numeric table with an optional leading label column. header size
// must equal (row_labels empty ? 0 : 1) + values.cols().
void write_table(const std::string& path, const std::vector<std::string>& header,
                 const std::vector<std::string>& row_labels, const Matrix& values);

// Shortest decimal form that parses back to the same double.
std::string format_double(double x);

}  // namespace perinet
