#pragma once

// Diagram scenes for Born-rule, tomographic and Causaloid-product
// expressions, emitted as DOT or SVG text.

#include <cstddef>
#include <string>
#include <vector>

#include "causaloid/causaloid.hpp"

namespace causaloid {

enum class NodeKind { Terminal, Circle, Rectangle, Dot, Hybrid };

// The index carried by a wire: alpha over Gamma, l over a tomographic Omega,
// k over a composite Omega.
struct IndexSet {
  char symbol = 'a';  // 'a' (alpha), 'l' or 'k'
  std::string region;
  std::size_t size = 0;

  bool operator==(const IndexSet&) const = default;
  std::string to_string() const;
};

struct DiagramNode {
  NodeKind kind = NodeKind::Circle;
  std::string label;
  std::size_t layer = 0;
  std::vector<IndexSet> ports;
};

struct DiagramWire {
  std::size_t from = 0;
  std::size_t to = 0;
  IndexSet from_set;
  IndexSet to_set;
};

struct DiagramScene {
  std::string title;
  std::vector<DiagramNode> nodes;
  std::vector<DiagramWire> wires;

  // Every wire joins ports with the same index set. Throws InvalidArgument.
  void check() const;
};

// "born:<R>", "tomographic:<R>", "product:<R1>,<R2>", where R is a region
// name or names joined by '+'. Throws UnknownEntry.
DiagramScene make_scene(const Causaloid& causaloid, const std::string& expression);

std::string emit_dot(const DiagramScene& scene);
std::string emit_svg(const DiagramScene& scene);

// format: "dot" or "svg".
std::string emit_diagram(const Causaloid& causaloid, const std::string& expression,
                         const std::string& format);

}  // namespace causaloid
