#include "causaloid/diagram.hpp"

#include <algorithm>
#include <map>

#include "causaloid/error.hpp"
#include "causaloid/report.hpp"

namespace causaloid {

std::string IndexSet::to_string() const {
  const char* name = symbol == 'a' ? "α" : symbol == 'l' ? "l" : "k";
  const char* set = symbol == 'a' ? "Γ" : "Ω";
  return std::string(name) + " ∈ " + set + "(" + region + ") [" + std::to_string(size) + "]";
}

void DiagramScene::check() const {
  for (std::size_t i = 0; i < wires.size(); ++i) {
    const auto& w = wires[i];
    if (w.from >= nodes.size() || w.to >= nodes.size())
      fail(ErrorCode::InvalidArgument, "wire " + std::to_string(i) + " has a dangling endpoint");
    const auto has = [](const DiagramNode& n, const IndexSet& s) {
      return std::find(n.ports.begin(), n.ports.end(), s) != n.ports.end();
    };
    if (!(w.from_set == w.to_set) || !has(nodes[w.from], w.from_set) || !has(nodes[w.to], w.to_set))
      fail(ErrorCode::InvalidArgument, "wire " + std::to_string(i) + " joins incompatible index sets " +
                                           w.from_set.to_string() + " and " + w.to_set.to_string());
  }
}

namespace {

struct SceneBuilder {
  DiagramScene scene;

  std::size_t node(NodeKind kind, std::string label, std::size_t layer, std::vector<IndexSet> ports) {
    scene.nodes.push_back({kind, std::move(label), layer, std::move(ports)});
    return scene.nodes.size() - 1;
  }
  void wire(std::size_t from, std::size_t to, const IndexSet& s) { scene.wires.push_back({from, to, s, s}); }
};

Region lookup(const Causaloid& causaloid, const std::string& text) {
  try {
    const Region r = parse_region(causaloid.layout(), text);
    if (!causaloid.available(r)) fail(ErrorCode::UnknownEntry, "no Causaloid entry for " + text);
    return r;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::UnknownEntry) throw;
    fail(ErrorCode::UnknownEntry, "bad region \"" + text + "\"");
  }
}

IndexSet gamma_set(const Causaloid& c, const Region& r) {
  return {'a', region_name(c.layout(), r), c.gamma(r).size()};
}

IndexSet omega_set(const Causaloid& c, const Region& r) {
  if (r.elementary()) return {'l', region_name(c.layout(), r), c.omega(r.least()).size()};
  return {'k', region_name(c.layout(), r), c.composite(r).omega.size()};
}

}  // namespace

DiagramScene make_scene(const Causaloid& causaloid, const std::string& expression) {
  const auto colon = expression.find(':');
  if (colon == std::string::npos) fail(ErrorCode::UnknownEntry, "expression needs kind:regions");
  const std::string kind = expression.substr(0, colon);
  const std::string args = expression.substr(colon + 1);
  SceneBuilder b;
  b.scene.title = expression;
  if (kind == "born") {
    const Region r = lookup(causaloid, args);
    const IndexSet alpha = gamma_set(causaloid, r), l = omega_set(causaloid, r);
    const auto in = b.node(NodeKind::Terminal, "", 0, {alpha});
    const auto rv = b.node(NodeKind::Circle, "r", 1, {alpha, l});
    const auto dot = b.node(NodeKind::Dot, "", 2, {l});
    const auto p = b.node(NodeKind::Circle, "p", 3, {l});
    b.wire(in, rv, alpha);
    b.wire(rv, dot, l);
    b.wire(dot, p, l);
  } else if (kind == "tomographic") {
    const Region r = lookup(causaloid, args);
    if (!r.elementary()) fail(ErrorCode::UnknownEntry, "tomographic expansion needs an elementary region");
    const IndexSet alpha = gamma_set(causaloid, r), l = omega_set(causaloid, r);
    const auto in = b.node(NodeKind::Terminal, "", 0, {alpha});
    const auto lambda = b.node(NodeKind::Rectangle, "Λ", 1, {alpha, l});
    const auto rv = b.node(NodeKind::Circle, "r", 2, {l});
    const auto dot = b.node(NodeKind::Dot, "", 3, {l});
    const auto p = b.node(NodeKind::Circle, "p", 4, {l});
    b.wire(in, lambda, alpha);
    b.wire(lambda, rv, l);
    b.wire(rv, dot, l);
    b.wire(dot, p, l);
  } else if (kind == "product") {
    const auto comma = args.find(',');
    if (comma == std::string::npos) fail(ErrorCode::UnknownEntry, "product needs two regions");
    const Region r1 = lookup(causaloid, args.substr(0, comma));
    const Region r2 = lookup(causaloid, args.substr(comma + 1));
    if (r1.intersects(r2)) fail(ErrorCode::UnknownEntry, "product regions overlap");
    const Region u = r1.united(r2);
    if (!causaloid.available(u))
      fail(ErrorCode::UnknownEntry, "no Causaloid entry for " + region_name(causaloid.layout(), u));
    const IndexSet a1 = gamma_set(causaloid, r1), a2 = gamma_set(causaloid, r2);
    const IndexSet l1 = omega_set(causaloid, r1), l2 = omega_set(causaloid, r2);
    const IndexSet k = omega_set(causaloid, u);
    const auto in1 = b.node(NodeKind::Terminal, "", 0, {a1});
    const auto in2 = b.node(NodeKind::Terminal, "", 0, {a2});
    const auto rv1 = b.node(NodeKind::Circle, "r", 1, {a1, l1});
    const auto rv2 = b.node(NodeKind::Circle, "r", 1, {a2, l2});
    const auto hybrid = b.node(NodeKind::Hybrid, "⊗Λ", 2, {l1, l2, k});
    const auto dot = b.node(NodeKind::Dot, "", 3, {k});
    const auto p = b.node(NodeKind::Circle, "p", 4, {k});
    b.wire(in1, rv1, a1);
    b.wire(in2, rv2, a2);
    b.wire(rv1, hybrid, l1);
    b.wire(rv2, hybrid, l2);
    b.wire(hybrid, dot, k);
    b.wire(dot, p, k);
  } else {
    fail(ErrorCode::UnknownEntry, "unknown expression kind \"" + kind + "\"");
  }
  b.scene.check();
  return b.scene;
}

namespace {

std::string escape(const std::string& s, bool xml) {
  std::string out;
  for (char c : s) {
    if (!xml && (c == '"' || c == '\\')) out += '\\';
    if (xml && c == '&') out += "&amp;";
    else if (xml && c == '<') out += "&lt;";
    else if (xml && c == '>') out += "&gt;";
    else if (xml && c == '"') out += "&quot;";
    else out += c;
  }
  return out;
}

const char* dot_shape(NodeKind k) {
  switch (k) {
    case NodeKind::Terminal: return "plaintext";
    case NodeKind::Circle: return "circle";
    case NodeKind::Rectangle: return "box";
    case NodeKind::Dot: return "point";
    case NodeKind::Hybrid: return "doublecircle";
  }
  return "circle";
}

struct Position {
  int x = 0;
  int y = 0;
};

std::vector<Position> layout_nodes(const DiagramScene& scene, int& width, int& height) {
  std::map<std::size_t, int> per_layer;
  std::vector<Position> pos(scene.nodes.size());
  std::size_t layers = 0;
  int rows = 1;
  for (std::size_t i = 0; i < scene.nodes.size(); ++i) {
    const auto layer = scene.nodes[i].layer;
    const int row = per_layer[layer]++;
    rows = std::max(rows, row + 1);
    layers = std::max(layers, layer + 1);
    pos[i] = {60 + static_cast<int>(layer) * 160, 60 + row * 100};
  }
  // Single-node layers sit between the rows of their neighbours.
  for (std::size_t i = 0; i < scene.nodes.size(); ++i)
    if (per_layer[scene.nodes[i].layer] == 1) pos[i].y = 60 + (rows - 1) * 50;
  width = 120 + static_cast<int>(layers) * 160;
  height = 80 + rows * 100;
  return pos;
}

}  // namespace

std::string emit_dot(const DiagramScene& scene) {
  scene.check();
  std::string out = "digraph \"" + escape(scene.title, false) + "\" {\n";
  out += "  rankdir=LR;\n";
  out += "  node [fontname=\"Helvetica\"];\n";
  for (std::size_t i = 0; i < scene.nodes.size(); ++i) {
    const auto& n = scene.nodes[i];
    out += "  n" + std::to_string(i) + " [shape=" + dot_shape(n.kind) + ", label=\"" +
           escape(n.label, false) + "\"";
    if (n.kind == NodeKind::Dot) out += ", width=0.08, style=filled, fillcolor=black";
    if (n.kind == NodeKind::Circle || n.kind == NodeKind::Rectangle)
      out += ", style=filled, fillcolor=\"#d8c8f0\"";
    out += "];\n";
  }
  for (std::size_t layer = 0;; ++layer) {
    std::string same;
    for (std::size_t i = 0; i < scene.nodes.size(); ++i)
      if (scene.nodes[i].layer == layer) same += " n" + std::to_string(i) + ";";
    if (same.empty()) break;
    out += "  { rank=same;" + same + " }\n";
  }
  for (const auto& w : scene.wires)
    out += "  n" + std::to_string(w.from) + " -> n" + std::to_string(w.to) + " [label=\"" +
           escape(w.from_set.to_string(), false) + "\", arrowhead=none];\n";
  out += "}\n";
  return out;
}

std::string emit_svg(const DiagramScene& scene) {
  scene.check();
  int width = 0, height = 0;
  const auto pos = layout_nodes(scene, width, height);
  std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) +
                    "\" height=\"" + std::to_string(height) + "\" viewBox=\"0 0 " +
                    std::to_string(width) + " " + std::to_string(height) + "\">\n";
  out += "  <title>" + escape(scene.title, true) + "</title>\n";
  auto num = [](int v) { return std::to_string(v); };
  for (const auto& w : scene.wires) {
    const auto a = pos[w.from], b = pos[w.to];
    out += "  <line x1=\"" + num(a.x) + "\" y1=\"" + num(a.y) + "\" x2=\"" + num(b.x) + "\" y2=\"" +
           num(b.y) + "\" stroke=\"black\"/>\n";
    out += "  <text x=\"" + num((a.x + b.x) / 2) + "\" y=\"" + num((a.y + b.y) / 2 - 8) +
           "\" font-size=\"10\" text-anchor=\"middle\">" + escape(w.from_set.to_string(), true) +
           "</text>\n";
  }
  for (std::size_t i = 0; i < scene.nodes.size(); ++i) {
    const auto& n = scene.nodes[i];
    const auto p = pos[i];
    const std::string label = escape(n.label, true);
    switch (n.kind) {
      case NodeKind::Terminal:
        break;
      case NodeKind::Circle:
        out += "  <circle cx=\"" + num(p.x) + "\" cy=\"" + num(p.y) +
               "\" r=\"20\" fill=\"#d8c8f0\" stroke=\"black\"/>\n";
        out += "  <text x=\"" + num(p.x) + "\" y=\"" + num(p.y + 5) +
               "\" font-size=\"14\" font-weight=\"bold\" text-anchor=\"middle\">" + label + "</text>\n";
        break;
      case NodeKind::Rectangle:
        out += "  <rect x=\"" + num(p.x - 20) + "\" y=\"" + num(p.y - 20) +
               "\" width=\"40\" height=\"40\" fill=\"#d8c8f0\" stroke=\"black\"/>\n";
        out += "  <text x=\"" + num(p.x) + "\" y=\"" + num(p.y + 5) +
               "\" font-size=\"14\" text-anchor=\"middle\">" + label + "</text>\n";
        break;
      case NodeKind::Dot:
        out += "  <circle cx=\"" + num(p.x) + "\" cy=\"" + num(p.y) + "\" r=\"4\" fill=\"black\"/>\n";
        break;
      case NodeKind::Hybrid:
        out += "  <circle cx=\"" + num(p.x) + "\" cy=\"" + num(p.y) +
               "\" r=\"10\" fill=\"white\" stroke=\"black\"/>\n";
        out += "  <text x=\"" + num(p.x) + "\" y=\"" + num(p.y + 5) +
               "\" font-size=\"14\" text-anchor=\"middle\">⊗</text>\n";
        out += "  <text x=\"" + num(p.x + 12) + "\" y=\"" + num(p.y - 8) +
               "\" font-size=\"10\">Λ</text>\n";
        break;
    }
  }
  out += "</svg>\n";
  return out;
}

std::string emit_diagram(const Causaloid& causaloid, const std::string& expression,
                         const std::string& format) {
  const DiagramScene scene = make_scene(causaloid, expression);
  if (format == "dot") return emit_dot(scene);
  if (format == "svg") return emit_svg(scene);
  fail(ErrorCode::InvalidArgument, "unknown diagram format \"" + format + "\"");
}

}  // namespace causaloid
