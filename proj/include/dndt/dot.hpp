#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "dndt/model.hpp"

namespace dndt {

// Minimal Graphviz DOT builder shared by the DNDT and CART exporters, so both
// render with the same node styles.
class DotWriter {
 public:
  explicit DotWriter(std::string graph_name);

  std::size_t add_internal(const std::string& label);
  std::size_t add_leaf(const std::string& label);
  void add_edge(std::size_t from, std::size_t to, const std::string& label);
  std::string str() const;

 private:
  std::string name_;
  std::vector<std::string> lines_;
  std::size_t next_id_ = 0;
};

std::string format_threshold(double value);
std::string to_dot(const TreeView& view);

}  // namespace dndt
