#include "gvfl/graph.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

namespace gvfl {

namespace {

std::ifstream open_or_throw(const std::filesystem::path& p) {
  std::ifstream f(p);
  if (!f) throw std::runtime_error("cannot open " + p.string());
  return f;
}

// Splits on any run of tabs/spaces; trailing \r from CRLF files is dropped.
std::vector<std::string_view> tokenize(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == '\t' || line[i] == ' ')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != '\t' && line[j] != ' ' &&
           line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j + (j < line.size() && line[j] == '\r' ? 1 : 0);
  }
  return out;
}

int parse_int(std::string_view tok, const std::string& path, int line) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || ptr != tok.data() + tok.size())
    throw ParseError(path, line, "expected integer, got '" + std::string(tok) + "'");
  return v;
}

double parse_double(std::string_view tok, const std::string& path, int line) {
  double v = 0.0;
  const auto [ptr, ec] =
      std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || ptr != tok.data() + tok.size())
    throw ParseError(path, line, "expected number, got '" + std::string(tok) + "'");
  return v;
}

}  // namespace

ParseError::ParseError(const std::string& path, int line,
                       const std::string& what)
    : std::runtime_error(path + ":" + std::to_string(line) + ": " + what),
      line_(line) {}

Graph load_graph(const std::filesystem::path& edge_list,
                 const std::filesystem::path& features,
                 const std::filesystem::path& labels) {
  Graph g;

  // Labels first: they define n's upper bound checks and the class set.
  std::vector<std::pair<int, int>> raw_labels;
  {
    std::ifstream f = open_or_throw(labels);
    std::string line;
    int ln = 0;
    while (std::getline(f, line)) {
      ++ln;
      if (line.empty() || line == "\r") continue;
      std::string_view sv = line;
      const auto comma = sv.find(',');
      if (comma == std::string_view::npos)
        throw ParseError(labels.string(), ln, "expected node_id,label");
      auto strip = [](std::string_view s) {
        while (!s.empty() && (s.back() == '\r' || s.back() == ' '))
          s.remove_suffix(1);
        return s;
      };
      const int id = parse_int(strip(sv.substr(0, comma)), labels.string(), ln);
      const int lab =
          parse_int(strip(sv.substr(comma + 1)), labels.string(), ln);
      raw_labels.emplace_back(id, lab);
    }
  }
  if (raw_labels.empty()) throw std::runtime_error("labels file is empty");
  int n = 0;
  for (auto [id, _] : raw_labels) n = std::max(n, id + 1);
  g.n = n;
  g.labels.assign(static_cast<std::size_t>(n), -1);
  std::set<int> classes;
  for (auto [id, lab] : raw_labels) {
    if (id < 0) throw std::runtime_error("negative node id in labels");
    g.labels[static_cast<std::size_t>(id)] = lab;
    classes.insert(lab);
  }
  for (int i = 0; i < n; ++i)
    if (g.labels[static_cast<std::size_t>(i)] == -1)
      throw std::runtime_error("labels file misses node " + std::to_string(i));
  int next = 0;
  for (int c : classes) g.label_map[c] = next++;
  for (int& l : g.labels) l = g.label_map.at(l);
  g.num_classes = next;

  // Features.
  if (features.empty()) {
    g.features = DenseMatrix::identity(n);
  } else {
    std::ifstream f = open_or_throw(features);
    std::string line;
    int ln = 0;
    std::vector<double> data;
    int cols = -1;
    int rows = 0;
    while (std::getline(f, line)) {
      ++ln;
      if (line.empty() || line == "\r") continue;
      int c = 0;
      std::string_view sv = line;
      if (!sv.empty() && sv.back() == '\r') sv.remove_suffix(1);
      std::size_t pos = 0;
      while (pos <= sv.size()) {
        const auto comma = sv.find(',', pos);
        const auto tok = sv.substr(
            pos, comma == std::string_view::npos ? sv.size() - pos
                                                 : comma - pos);
        data.push_back(parse_double(tok, features.string(), ln));
        ++c;
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
      }
      if (cols == -1) {
        cols = c;
      } else if (c != cols) {
        throw ParseError(features.string(), ln,
                         "row has " + std::to_string(c) + " columns, expected " +
                             std::to_string(cols));
      }
      ++rows;
    }
    if (rows != n)
      throw std::runtime_error("features: " + std::to_string(rows) +
                               " rows for " + std::to_string(n) + " nodes");
    g.features = DenseMatrix(rows, cols, std::move(data));
  }

  // Edges.
  {
    std::ifstream f = open_or_throw(edge_list);
    std::string line;
    int ln = 0;
    std::vector<std::pair<int, int>> edges;
    while (std::getline(f, line)) {
      ++ln;
      if (line.empty() || line == "\r") continue;
      const auto toks = tokenize(line);
      if (toks.size() != 2)
        throw ParseError(edge_list.string(), ln, "expected 'u<TAB>v'");
      const int u = parse_int(toks[0], edge_list.string(), ln);
      const int v = parse_int(toks[1], edge_list.string(), ln);
      if (u < 0 || u >= n || v < 0 || v >= n)
        throw ParseError(edge_list.string(), ln, "node id out of range");
      if (u == v) continue;  // self-loops are dropped
      edges.emplace_back(u, v);
    }
    g.adjacency = SparseSymMatrix::from_edges(n, edges);
  }
  return g;
}

Graph load_graph_dir(const std::filesystem::path& dir) {
  return load_graph(dir / "edges.tsv", dir / "features.csv",
                    dir / "labels.csv");
}

ConvertStats convert_citation_graph(const std::filesystem::path& content,
                                    const std::filesystem::path& cites,
                                    const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  ConvertStats stats;

  std::unordered_map<std::string, int> id_of;
  std::vector<std::string> label_strings;
  {
    std::ifstream in = open_or_throw(content);
    std::ofstream feat(out_dir / "features.csv");
    std::string line;
    int ln = 0;
    int cols = -1;
    while (std::getline(in, line)) {
      ++ln;
      if (line.empty() || line == "\r") continue;
      const auto toks = tokenize(line);
      if (toks.size() < 3)
        throw ParseError(content.string(), ln,
                         "expected id, features..., label");
      const int fcols = static_cast<int>(toks.size()) - 2;
      if (cols == -1) cols = fcols;
      if (fcols != cols)
        throw ParseError(content.string(), ln, "inconsistent feature count");
      const std::string paper_id(toks.front());
      if (!id_of.emplace(paper_id, stats.nodes).second)
        throw ParseError(content.string(), ln, "duplicate id " + paper_id);
      std::string row;
      row.reserve(static_cast<std::size_t>(fcols) * 2);
      for (int j = 0; j < fcols; ++j) {
        parse_double(toks[static_cast<std::size_t>(j) + 1], content.string(),
                     ln);  // validate
        if (j) row += ',';
        row += std::string(toks[static_cast<std::size_t>(j) + 1]);
      }
      feat << row << '\n';
      label_strings.emplace_back(toks.back());
      ++stats.nodes;
    }
    stats.feature_dim = cols;
  }

  // Label strings -> contiguous ids in sorted order.
  std::set<std::string> uniq(label_strings.begin(), label_strings.end());
  std::unordered_map<std::string, int> class_of;
  int next = 0;
  for (const std::string& s : uniq) class_of[s] = next++;
  stats.num_classes = next;
  {
    std::ofstream lab(out_dir / "labels.csv");
    for (int i = 0; i < stats.nodes; ++i)
      lab << i << ',' << class_of.at(label_strings[static_cast<std::size_t>(i)])
          << '\n';
  }

  {
    std::ifstream in = open_or_throw(cites);
    std::ofstream out(out_dir / "edges.tsv");
    std::string line;
    int ln = 0;
    while (std::getline(in, line)) {
      ++ln;
      if (line.empty() || line == "\r") continue;
      const auto toks = tokenize(line);
      if (toks.size() != 2)
        throw ParseError(cites.string(), ln, "expected two ids");
      const auto a = id_of.find(std::string(toks[0]));
      const auto b = id_of.find(std::string(toks[1]));
      if (a == id_of.end() || b == id_of.end())
        throw ParseError(cites.string(), ln, "id not present in content file");
      ++stats.cite_lines;
      if (a->second == b->second) {
        ++stats.skipped_self_loops;
        continue;
      }
      out << a->second << '\t' << b->second << '\n';
    }
  }
  return stats;
}

SplitSpec make_split(const Graph& g, SeededRng& rng, int per_class_train,
                     int val_size, int test_size) {
  if (per_class_train <= 0)
    throw std::invalid_argument("make_split: per_class_train must be >= 1");
  std::vector<std::vector<int>> by_class(
      static_cast<std::size_t>(g.num_classes));
  for (int i = 0; i < g.n; ++i)
    by_class[static_cast<std::size_t>(g.labels[static_cast<std::size_t>(i)])]
        .push_back(i);

  SplitSpec split;
  std::vector<char> in_train(static_cast<std::size_t>(g.n), 0);
  for (int c = 0; c < g.num_classes; ++c) {
    auto& nodes = by_class[static_cast<std::size_t>(c)];
    if (static_cast<int>(nodes.size()) < per_class_train)
      throw std::invalid_argument("make_split: class " + std::to_string(c) +
                                  " has only " +
                                  std::to_string(nodes.size()) + " nodes");
    rng.shuffle(nodes);
    for (int i = 0; i < per_class_train; ++i) {
      split.train.push_back(nodes[static_cast<std::size_t>(i)]);
      in_train[static_cast<std::size_t>(nodes[static_cast<std::size_t>(i)])] = 1;
    }
  }
  std::sort(split.train.begin(), split.train.end());

  std::vector<int> rest;
  rest.reserve(static_cast<std::size_t>(g.n));
  for (int i = 0; i < g.n; ++i)
    if (!in_train[static_cast<std::size_t>(i)]) rest.push_back(i);
  if (static_cast<int>(rest.size()) < val_size + test_size)
    throw std::invalid_argument("make_split: not enough nodes for val+test");
  rng.shuffle(rest);
  split.val.assign(rest.begin(), rest.begin() + val_size);
  split.test.assign(rest.begin() + val_size,
                    rest.begin() + val_size + test_size);
  std::sort(split.val.begin(), split.val.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

Graph synth_sbm(const std::vector<int>& block_sizes, double intra_p,
                double inter_p, int feat_dim, SeededRng& rng) {
  if (intra_p < 0 || intra_p > 1 || inter_p < 0 || inter_p > 1)
    throw std::invalid_argument("synth_sbm: probabilities must be in [0,1]");
  const int blocks = static_cast<int>(block_sizes.size());
  if (blocks == 0 || feat_dim < blocks)
    throw std::invalid_argument("synth_sbm: need feat_dim >= block count");
  Graph g;
  for (int b = 0; b < blocks; ++b)
    for (int i = 0; i < block_sizes[static_cast<std::size_t>(b)]; ++i)
      g.labels.push_back(b);
  g.n = static_cast<int>(g.labels.size());
  g.num_classes = blocks;
  for (int b = 0; b < blocks; ++b) g.label_map[b] = b;

  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < g.n; ++i) {
    for (int j = i + 1; j < g.n; ++j) {
      const double p = g.labels[static_cast<std::size_t>(i)] ==
                               g.labels[static_cast<std::size_t>(j)]
                           ? intra_p
                           : inter_p;
      if (rng.uniform() < p) edges.emplace_back(i, j);
    }
  }
  g.adjacency = SparseSymMatrix::from_edges(g.n, edges);

  g.features = DenseMatrix(g.n, feat_dim);
  for (int i = 0; i < g.n; ++i) {
    g.features(i, g.labels[static_cast<std::size_t>(i)]) = 1.0;
    for (int j = 0; j < feat_dim; ++j)
      g.features(i, j) += 0.1 * rng.normal();
  }
  return g;
}

}  // namespace gvfl
