#include "dndt/dot.hpp"

#include <cstdio>

namespace dndt {
namespace {

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    out += c;
  }
  return out;
}

std::string interval_label(const std::vector<double>& t, std::size_t bin) {
  if (bin == 0) return "< " + format_threshold(t.front());
  if (bin == t.size()) return ">= " + format_threshold(t.back());
  return "[" + format_threshold(t[bin - 1]) + ", " + format_threshold(t[bin]) + ")";
}

std::size_t emit(DotWriter& dot, const TreeViewNode& node, const std::vector<std::string>& classes) {
  if (node.is_leaf) {
    std::string label = classes[node.predicted_class] + "\nleaf " + std::to_string(node.leaf_index) + "\nn = " +
                        std::to_string(node.count) + " [";
    for (std::size_t c = 0; c < node.class_counts.size(); ++c) {
      if (c) label += ", ";
      label += std::to_string(node.class_counts[c]);
    }
    return dot.add_leaf(label + "]");
  }
  const std::size_t id = dot.add_internal(node.feature_name);
  for (std::size_t bin = 0; bin < node.children.size(); ++bin) {
    const std::size_t child = emit(dot, node.children[bin], classes);
    dot.add_edge(id, child, interval_label(node.thresholds, bin));
  }
  return id;
}

}  // namespace

DotWriter::DotWriter(std::string graph_name) : name_(std::move(graph_name)) {}

std::size_t DotWriter::add_internal(const std::string& label) {
  lines_.push_back("  n" + std::to_string(next_id_) + " [shape=box, label=\"" + escape(label) + "\"];");
  return next_id_++;
}

std::size_t DotWriter::add_leaf(const std::string& label) {
  lines_.push_back("  n" + std::to_string(next_id_) + " [shape=ellipse, label=\"" + escape(label) + "\"];");
  return next_id_++;
}

void DotWriter::add_edge(std::size_t from, std::size_t to, const std::string& label) {
  lines_.push_back("  n" + std::to_string(from) + " -> n" + std::to_string(to) + " [label=\"" + escape(label) + "\"];");
}

std::string DotWriter::str() const {
  std::string out = "digraph " + name_ + " {\n  node [fontname=\"Helvetica\"];\n  edge [fontname=\"Helvetica\"];\n";
  for (const std::string& line : lines_) out += line + "\n";
  return out + "}\n";
}

std::string format_threshold(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", value);
  return buf;
}

std::string to_dot(const TreeView& view) {
  DotWriter dot("dndt");
  emit(dot, view.root, view.class_names);
  return dot.str();
}

}  // namespace dndt
