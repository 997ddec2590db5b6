#include "filtra/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <unistd.h>

namespace filtra {

void write_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot open " + tmp.string() + " for writing");
    f << content;
    f.flush();
    if (!f) throw Error("write to " + tmp.string() + " failed");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw Error("cannot move output into place at " + path + ": " + ec.message());
  }
}

nlohmann::json space_json(const OrderedStateSpace& s) {
  nlohmann::json j;
  j["level"] = s.level();
  j["order"] = s.totally_ordered() ? "total" : "coordinate";
  j["states"] = nlohmann::json::array();
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s.totally_ordered()) {
      j["states"].push_back(s.value(i));
    } else {
      j["states"].push_back(s.state(i));
    }
  }
  return j;
}

SpacePtr space_from_json(const nlohmann::json& j) {
  const int level = j.at("level").get<int>();
  const std::string order = j.at("order").get<std::string>();
  if (order == "total") return OrderedStateSpace::total(level, j.at("states").get<std::vector<int>>());
  if (order == "coordinate") return OrderedStateSpace::coordinates(level, j.at("states").get<std::vector<Coord>>());
  throw Error("unknown state order '" + order + "'");
}

nlohmann::json graph_to_json(const BratteliGraph& g) {
  nlohmann::json j;
  j["schema"] = "filtra.graph";
  j["schema_version"] = kGraphSchemaVersion;
  j["tag"] = to_string(g.tag());
  j["depth"] = g.depth();
  j["levels"] = nlohmann::json::array();
  for (int n = g.depth(); n <= 0; ++n) j["levels"].push_back(space_json(*g.vertices(n)));
  j["edges"] = nlohmann::json::array();
  for (int n = g.depth(); n < 0; ++n)
    for (std::size_t v = 0; v < g.vertices(n)->size(); ++v)
      for (const auto& e : g.up(n, v)) j["edges"].push_back({n, v, e.to, e.mult});
  return j;
}

GraphPtr graph_from_json(const nlohmann::json& j) {
  if (j.value("schema", "") != "filtra.graph") throw Error("not a graph document");
  if (j.value("schema_version", 0) != kGraphSchemaVersion) throw Error("unsupported graph schema version");
  const int depth = j.at("depth").get<int>();
  std::vector<SpacePtr> levels;
  for (const auto& l : j.at("levels")) levels.push_back(space_from_json(l));
  if (levels.size() != static_cast<std::size_t>(-depth) + 1) throw Error("graph document: one level per step required");
  std::vector<std::vector<std::vector<Edge>>> up(levels.size() - 1);
  for (std::size_t i = 0; i + 1 < levels.size(); ++i) up[i].resize(levels[i]->size());
  for (const auto& e : j.at("edges")) {
    const int n = e.at(0).get<int>();
    if (n < depth || n >= 0) throw Error("graph document: edge level out of range");
    auto& lists = up[static_cast<std::size_t>(n - depth)];
    const auto v = e.at(1).get<std::size_t>();
    if (v >= lists.size()) throw Error("graph document: edge source out of range");
    lists[v].push_back({e.at(2).get<std::size_t>(), e.at(3).get<long>()});
  }
  GraphTag tag = GraphTag::custom;
  const std::string t = j.value("tag", "custom");
  for (GraphTag c : {GraphTag::pascal, GraphTag::euler, GraphTag::odometer, GraphTag::next_jump,
                     GraphTag::multipascal})
    if (t == to_string(c)) tag = c;
  return std::make_shared<const BratteliGraph>(tag, depth, std::move(levels), std::move(up));
}

std::string embedding_svg(const BratteliGraph& g, const std::vector<std::vector<double>>& positions,
                          const std::string& title) {
  const int rows = static_cast<int>(positions.size());
  if (rows == 0) throw Error("nothing to draw");
  const double width = 800, left = 70, right = 30, top = 50, gap = 36;
  const double span = width - left - right;
  const double height = top + gap * (rows - 1) + 40;
  auto x_of = [&](int row, std::size_t v) { return left + span * positions[static_cast<std::size_t>(row)][v]; };
  // deepest level at the bottom
  auto y_of = [&](int row) { return top + gap * (rows - 1 - row); };

  std::ostringstream os;
  os << std::fixed << std::setprecision(2);
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << width << "\" height=\"" << height
     << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
  os << "<title>" << title << "</title>\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << left << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\">" << title << "</text>\n";
  os << "<g stroke=\"#8a8a8a\" stroke-width=\"0.6\">\n";
  for (int r = 0; r + 1 < rows; ++r) {
    const int n = g.depth() + r;
    for (std::size_t v = 0; v < positions[static_cast<std::size_t>(r)].size(); ++v)
      for (const auto& e : g.up(n, v))
        os << "<line x1=\"" << x_of(r, v) << "\" y1=\"" << y_of(r) << "\" x2=\"" << x_of(r + 1, e.to) << "\" y2=\""
           << y_of(r + 1) << "\"/>\n";
  }
  os << "</g>\n<g fill=\"#1f4e9c\">\n";
  for (int r = 0; r < rows; ++r)
    for (std::size_t v = 0; v < positions[static_cast<std::size_t>(r)].size(); ++v)
      os << "<circle cx=\"" << x_of(r, v) << "\" cy=\"" << y_of(r) << "\" r=\"2.6\"/>\n";
  os << "</g>\n<g font-family=\"sans-serif\" font-size=\"11\" fill=\"#333\">\n";
  for (int r = 0; r < rows; ++r)
    os << "<text x=\"8\" y=\"" << y_of(r) + 4 << "\">n=" << g.depth() + r << "</text>\n";
  os << "<text x=\"" << left - 3 << "\" y=\"" << height - 12 << "\">0</text>\n";
  os << "<text x=\"" << left + span - 3 << "\" y=\"" << height - 12 << "\">1</text>\n";
  os << "</g>\n</svg>\n";
  return os.str();
}

}  // namespace filtra
