#pragma once

// Serialization: the JSONL dataset format (one header record with the graph
// and featurizer descriptors, then one record per example), document datasets
// with a "doc" field, content hashing for report provenance, and JSON/CSV
// report helpers. Labels are 0-based in the file format.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "sop/graph.hpp"
#include "sop/mixing.hpp"
#include "sop/scoring.hpp"

namespace sop::io {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

// ---- content hashing (FNV-1a 64) ----

inline std::uint64_t fnv1a(const std::string& data) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

inline std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

inline std::string content_hash(const std::string& data) { return hash_hex(fnv1a(data)); }

inline std::string file_hash(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("file_hash: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return content_hash(ss.str());
}

// ---- basic value codecs ----

inline json sparse_to_json(const SparseVec& v) {
  json idx = json::array();
  json val = json::array();
  for (const auto& [i, x] : v.entries) {
    idx.push_back(i);
    val.push_back(x);
  }
  return json{{"i", idx}, {"v", val}};
}

inline SparseVec sparse_from_json(const json& j) {
  SparseVec v;
  const auto& idx = j.at("i");
  const auto& val = j.at("v");
  if (idx.size() != val.size())
    throw std::runtime_error("dataset: sparse index/value length mismatch");
  for (std::size_t k = 0; k < idx.size(); ++k)
    v.push(idx[k].get<int>(), val[k].get<double>());
  v.compress();
  return v;
}

inline json graph_to_json(const FactorGraph& g) {
  return json{{"num_vars", g.num_vars},
              {"alphabet_sizes", g.alphabet_sizes},
              {"factors", g.factors}};
}

inline FactorGraph graph_from_json(const json& j) {
  return make_graph(j.at("num_vars").get<int>(),
                    j.at("alphabet_sizes").get<std::vector<int>>(),
                    j.at("factors").get<std::vector<std::vector<int>>>());
}

inline json featurizer_to_json(const Featurizer& fz) {
  if (const auto* cc = std::get_if<ChainCrf>(&fz))
    return json{{"kind", "chain_crf"},
                {"context_dim", cc->context_dim},
                {"alphabet", cc->alphabet}};
  return json{{"kind", "tables"}, {"dim", std::get<Tables>(fz).dim}};
}

inline Featurizer featurizer_from_json(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "chain_crf")
    return ChainCrf{j.at("context_dim").get<int>(), j.at("alphabet").get<int>()};
  if (kind == "tables") return Tables{j.at("dim").get<int>()};
  throw std::runtime_error("dataset: unknown featurizer kind '" + kind + "'");
}

inline json input_to_json(const StructuredInput& x) {
  if (const auto* cs = std::get_if<ContextSequence>(&x))
    return json{{"contexts", cs->contexts}};
  const auto& ft = std::get<FeatureTables>(x);
  json tables = json::array();
  for (const auto& slot : ft.tables) {
    json t = json::array();
    for (const auto& v : slot) t.push_back(sparse_to_json(v));
    tables.push_back(std::move(t));
  }
  return json{{"dim", ft.dim}, {"tables", tables}};
}

inline StructuredInput input_from_json(const json& j) {
  if (j.contains("contexts")) {
    ContextSequence cs;
    cs.contexts = j.at("contexts").get<std::vector<std::vector<double>>>();
    return cs;
  }
  FeatureTables ft;
  ft.dim = j.at("dim").get<int>();
  for (const auto& slot : j.at("tables")) {
    std::vector<SparseVec> vs;
    for (const auto& t : slot) vs.push_back(sparse_from_json(t));
    ft.tables.push_back(std::move(vs));
  }
  return ft;
}

// ---- JSONL datasets ----

inline json dataset_header(const FactorGraph& g, const Featurizer& fz) {
  return json{{"schema_version", kSchemaVersion},
              {"graph", graph_to_json(g)},
              {"featurizer", featurizer_to_json(fz)}};
}

inline void write_dataset(std::ostream& out, const Dataset& ds) {
  out << dataset_header(ds.graph, ds.featurizer).dump() << "\n";
  for (const auto& ex : ds.examples)
    out << json{{"x", input_to_json(ex.x)}, {"y", ex.y}}.dump() << "\n";
}

inline void write_dataset(const std::string& path, const Dataset& ds) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_dataset: cannot open " + path);
  write_dataset(out, ds);
}

inline Dataset read_dataset(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("dataset: empty file");
  const json header = json::parse(line);
  if (header.at("schema_version").get<int>() != kSchemaVersion)
    throw std::runtime_error("dataset: unsupported schema version");
  Dataset ds;
  ds.graph = graph_from_json(header.at("graph"));
  ds.featurizer = featurizer_from_json(header.at("featurizer"));
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json rec = json::parse(line);
    StructuredExample ex{input_from_json(rec.at("x")),
                         rec.at("y").get<LabelAssignment>()};
    validate_input(ds.graph, ex.x);
    validate_assignment(ds.graph, ex.y);
    ds.examples.push_back(std::move(ex));
  }
  return ds;
}

inline Dataset read_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_dataset: cannot open " + path);
  return read_dataset(in);
}

// Document datasets add a "doc" index and the latent state to each record.
inline void write_documents(std::ostream& out, const mixing::DocumentDataset& dd) {
  json header = dataset_header(dd.graph, dd.featurizer);
  header["m"] = dd.documents.size();
  header["J"] = dd.documents.empty() ? 0 : dd.documents[0].size();
  header["seed"] = dd.seed;
  out << header.dump() << "\n";
  for (std::size_t i = 0; i < dd.documents.size(); ++i)
    for (std::size_t j = 0; j < dd.documents[i].size(); ++j) {
      const auto& ex = dd.documents[i][j];
      out << json{{"doc", i},
                  {"state", dd.states[i][j]},
                  {"x", input_to_json(ex.x)},
                  {"y", ex.y}}
                 .dump()
          << "\n";
    }
}

inline void write_documents(const std::string& path, const mixing::DocumentDataset& dd) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_documents: cannot open " + path);
  write_documents(out, dd);
}

inline mixing::DocumentDataset read_documents(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("documents: empty file");
  const json header = json::parse(line);
  if (header.at("schema_version").get<int>() != kSchemaVersion)
    throw std::runtime_error("documents: unsupported schema version");
  mixing::DocumentDataset dd;
  dd.graph = graph_from_json(header.at("graph"));
  dd.featurizer = featurizer_from_json(header.at("featurizer"));
  dd.seed = header.value("seed", std::uint64_t{0});
  const std::size_t m = header.at("m").get<std::size_t>();
  dd.documents.resize(m);
  dd.states.resize(m);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json rec = json::parse(line);
    const std::size_t i = rec.at("doc").get<std::size_t>();
    if (i >= m) throw std::runtime_error("documents: doc index out of range");
    StructuredExample ex{input_from_json(rec.at("x")),
                         rec.at("y").get<LabelAssignment>()};
    validate_input(dd.graph, ex.x);
    validate_assignment(dd.graph, ex.y);
    dd.documents[i].push_back(std::move(ex));
    dd.states[i].push_back(rec.at("state").get<int>());
  }
  const std::size_t J = header.at("J").get<std::size_t>();
  for (const auto& doc : dd.documents)
    if (doc.size() != J) throw std::runtime_error("documents: ragged document");
  return dd;
}

inline mixing::DocumentDataset read_documents(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_documents: cannot open " + path);
  return read_documents(in);
}

// ---- reports ----

// Provenance tag for every reported number: how it was obtained.
inline const char* kProvenanceMeasured = "measured";
inline const char* kProvenanceExact = "exact-constant formula";
inline const char* kProvenanceShapeOnly = "shape-only";

inline json make_report(const std::string& kind, json config) {
  return json{{"schema_version", kSchemaVersion},
              {"kind", kind},
              {"config", std::move(config)}};
}

inline void write_json(const std::string& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_json: cannot open " + path);
  out << j.dump(2) << "\n";
}

// 17 significant digits: round-trips any double.
inline std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return std::string(buf);
}

inline void write_csv(const std::string& path, const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_csv: cannot open " + path);
  for (std::size_t c = 0; c < header.size(); ++c)
    out << (c ? "," : "") << header[c];
  out << "\n";
  for (const auto& row : rows) {
    if (row.size() != header.size())
      throw std::invalid_argument("write_csv: row width mismatch");
    for (std::size_t c = 0; c < row.size(); ++c)
      out << (c ? "," : "") << format_double(row[c]);
    out << "\n";
  }
}

}  // namespace sop::io
