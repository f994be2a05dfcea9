#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "driftforge/error.h"
#include "driftforge/lexicon.h"
#include "driftforge/text.h"
#include "json.hpp"

namespace driftforge {

namespace pt = boost::property_tree;
using nlohmann::json;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// ---------------------------------------------------------------- MeSH XML

void ingest_mesh_record(const pt::ptree& record, const char* ui_tag,
                        const char* name_tag, ConceptLexicon& lex,
                        std::size_t& skipped) {
  const std::string ui = record.get<std::string>(ui_tag, "");
  const std::string name = record.get<std::string>(std::string(name_tag) + ".String", "");
  if (text::normalize_term(name).empty()) {
    ++skipped;
    return;
  }
  std::vector<std::string> terms;
  if (auto concepts = record.get_child_optional("ConceptList")) {
    for (const auto& [tag, concept_node] : *concepts) {
      if (tag != "Concept") continue;
      auto term_list = concept_node.get_child_optional("TermList");
      if (!term_list) continue;
      for (const auto& [ttag, term] : *term_list) {
        if (ttag != "Term") continue;
        const std::string s = term.get<std::string>("String", "");
        if (!s.empty()) terms.push_back(s);
      }
    }
  }
  lex.add(ui.empty() ? "mesh:" + text::normalize_term(name) : ui, name, terms,
          "mesh");
}

// ---------------------------------------------------------------- CSV

std::vector<std::vector<std::string>> parse_delimited(const std::string& content,
                                                      char delim) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool in_quotes = false;
  bool row_has_content = false;
  std::size_t line = 1;
  for (std::size_t i = 0; i < content.size(); ++i) {
    const char c = content[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < content.size() && content[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field += c;
      }
      continue;
    }
    if (c == '"') {
      in_quotes = true;
      row_has_content = true;
    } else if (c == delim) {
      row.push_back(std::move(field));
      field.clear();
      row_has_content = true;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < content.size() && content[i + 1] == '\n') ++i;
      if (row_has_content || !field.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
      }
      row.clear();
      field.clear();
      row_has_content = false;
      ++line;
    } else {
      field += c;
      row_has_content = true;
    }
  }
  if (in_quotes) throw ParseError("unterminated quoted field", line);
  if (row_has_content || !field.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::size_t column_index(const std::vector<std::string>& header,
                         const std::string& name) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (text::trim(header[i]) == name) return i;
  }
  throw ConfigError("column '" + name + "' not found in header");
}

// ---------------------------------------------------------------- CSO

std::string cso_term(std::string_view field) {
  std::string_view s = text::trim(field);
  if (!s.empty() && s.front() == '<') s.remove_prefix(1);
  if (!s.empty() && s.back() == '>') s.remove_suffix(1);
  if (const auto slash = s.find_last_of("/#"); slash != std::string_view::npos) {
    s = s.substr(slash + 1);
  }
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '%' && i + 2 < s.size() && std::isxdigit(static_cast<unsigned char>(s[i + 1])) &&
        std::isxdigit(static_cast<unsigned char>(s[i + 2]))) {
      out += static_cast<char>(std::stoi(std::string(s.substr(i + 1, 2)), nullptr, 16));
      i += 2;
    } else if (s[i] == '_') {
      out += ' ';
    } else {
      out += s[i];
    }
  }
  return out;
}

class DisjointSets {
 public:
  std::size_t make() {
    parent_.push_back(parent_.size());
    return parent_.size() - 1;
  }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }

 private:
  std::vector<std::size_t> parent_;
};

// ---------------------------------------------------------------- LLM JSON

void ingest_llm_object(const json& obj, bool strict, std::size_t lineno,
                       ConceptLexicon& lex) {
  if (!obj.is_object()) throw ParseError("lexicon record is not an object", lineno);
  if (!obj.contains("entities")) throw ParseError("missing key 'entities'", lineno);
  if (strict && obj.size() != 1) {
    for (const auto& [k, _] : obj.items()) {
      if (k != "entities") throw ParseError("unexpected key '" + k + "'", lineno);
    }
  }
  const json& entities = obj["entities"];
  if (!entities.is_array()) throw ParseError("'entities' must be an array", lineno);
  for (const json& e : entities) {
    if (!e.is_object()) throw ParseError("entity is not an object", lineno);
    if (strict) {
      for (const auto& [k, _] : e.items()) {
        if (k != "term" && k != "synonyms") {
          throw ParseError("unexpected entity key '" + k + "'", lineno);
        }
      }
      if (!e.contains("synonyms")) throw ParseError("entity missing 'synonyms'", lineno);
    }
    if (!e.contains("term") || !e["term"].is_string()) {
      throw ParseError("entity 'term' must be a string", lineno);
    }
    std::vector<std::string> synonyms;
    if (e.contains("synonyms")) {
      if (!e["synonyms"].is_array()) {
        throw ParseError("entity 'synonyms' must be an array", lineno);
      }
      for (const json& s : e["synonyms"]) {
        if (!s.is_string()) throw ParseError("synonym must be a string", lineno);
        synonyms.push_back(s.get<std::string>());
      }
    }
    const std::string term = e["term"].get<std::string>();
    const std::string key = text::normalize_term(term);
    if (key.empty()) continue;
    lex.add("llm:" + key, term, synonyms, "llm");
  }
}

}  // namespace

ConceptLexicon parse_mesh_xml(const std::string& xml) {
  if (text::trim(xml).empty()) return {};
  pt::ptree tree;
  std::istringstream in(xml);
  try {
    pt::read_xml(in, tree, pt::xml_parser::trim_whitespace);
  } catch (const pt::xml_parser_error& e) {
    throw ParseError("malformed MeSH XML: " + e.message(), e.line());
  }
  ConceptLexicon lex;
  std::size_t skipped = 0;
  for (const auto& [root_tag, root] : tree) {
    for (const auto& [tag, record] : root) {
      if (tag == "DescriptorRecord") {
        ingest_mesh_record(record, "DescriptorUI", "DescriptorName", lex, skipped);
      } else if (tag == "SupplementalRecord") {
        ingest_mesh_record(record, "SupplementalRecordUI", "SupplementalRecordName",
                           lex, skipped);
      }
    }
  }
  if (skipped > 0) {
    std::cerr << "warning: skipped " << skipped << " MeSH record(s) without a name\n";
  }
  return lex;
}

ConceptLexicon ingest_mesh_xml(const std::string& path) {
  return parse_mesh_xml(read_file(path));
}

ConceptLexicon parse_tabular_thesaurus(const std::string& content,
                                       const TabularOptions& options) {
  const auto rows = parse_delimited(content, options.delimiter);
  if (rows.empty()) throw ConfigError("thesaurus table has no header row");
  const std::size_t pt_col = column_index(rows[0], options.pt_column);
  const std::size_t npt_col = column_index(rows[0], options.npt_column);
  ConceptLexicon lex;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    const std::string preferred =
        pt_col < row.size() ? std::string(text::trim(row[pt_col])) : "";
    const std::string key = text::normalize_term(preferred);
    if (key.empty()) continue;
    std::vector<std::string> synonyms;
    if (npt_col < row.size() && !text::trim(row[npt_col]).empty()) {
      synonyms.emplace_back(text::trim(row[npt_col]));
    }
    lex.add("pt:" + key, preferred, synonyms, "tabular");
  }
  return lex;
}

ConceptLexicon ingest_tabular_thesaurus(const std::string& path,
                                        const TabularOptions& options) {
  return parse_tabular_thesaurus(read_file(path), options);
}

ConceptLexicon parse_cso_triples(const std::string& content) {
  const auto rows = parse_delimited(content, ',');
  DisjointSets sets;
  std::map<std::string, std::size_t> node_of;
  std::vector<std::string> names;
  std::map<std::size_t, std::string> preferred_target;  // node -> preferred name
  auto node = [&](const std::string& name) {
    auto [it, inserted] = node_of.emplace(name, 0);
    if (inserted) {
      it->second = sets.make();
      names.push_back(name);
    }
    return it->second;
  };
  std::size_t line = 0;
  for (const auto& row : rows) {
    ++line;
    if (row.size() < 3) throw ParseError("expected 3 fields per triple", line);
    const std::string a = cso_term(row[0]);
    const std::string rel = cso_term(row[1]);
    const std::string b = cso_term(row[2]);
    if (text::normalize_term(a).empty() || text::normalize_term(b).empty()) continue;
    const std::size_t na = node(a);
    const std::size_t nb = node(b);
    if (rel == "relatedEquivalent") {
      sets.unite(na, nb);
    } else if (rel == "preferentialEquivalent") {
      sets.unite(na, nb);
      preferred_target.emplace(na, b);
    }
  }
  std::map<std::size_t, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < names.size(); ++i) groups[sets.find(i)].push_back(i);
  ConceptLexicon lex;
  for (const auto& [root, members] : groups) {
    std::vector<std::string> terms;
    for (std::size_t m : members) terms.push_back(names[m]);
    std::sort(terms.begin(), terms.end());
    // An explicitly designated preferred term wins over the alphabetical pick.
    std::string preferred = terms.front();
    bool designated = false;
    for (std::size_t m : members) {
      auto it = preferred_target.find(m);
      if (it == preferred_target.end()) continue;
      if (!designated || it->second < preferred) preferred = it->second;
      designated = true;
    }
    lex.add("cso:" + text::normalize_term(preferred), preferred, terms, "cso");
  }
  return lex;
}

ConceptLexicon ingest_cso_triples(const std::string& path) {
  return parse_cso_triples(read_file(path));
}

ConceptLexicon parse_llm_lexicon(const std::string& content, bool strict) {
  ConceptLexicon lex;
  if (text::trim(content).empty()) return lex;
  // A single (possibly pretty-printed) object, else JSON Lines.
  json whole = json::parse(content, nullptr, /*allow_exceptions=*/false);
  if (!whole.is_discarded()) {
    ingest_llm_object(whole, strict, 0, lex);
    return lex;
  }
  std::istringstream in(content);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("invalid JSON: ") + e.what(), lineno);
    }
    ingest_llm_object(obj, strict, lineno, lex);
  }
  return lex;
}

ConceptLexicon ingest_llm_lexicon(const std::string& path, bool strict) {
  return parse_llm_lexicon(read_file(path), strict);
}

std::string lexicon_to_json(const ConceptLexicon& lexicon, const std::string& meta_json) {
  json arr = json::array();
  for (const Concept& c : lexicon.concepts()) {
    arr.push_back({{"concept_id", c.id},
                   {"preferred", c.preferred},
                   {"synonyms", c.synonyms},
                   {"sources", std::vector<std::string>(c.sources.begin(), c.sources.end())}});
  }
  if (meta_json.empty()) return arr.dump(1) + "\n";
  json wrapped = json::parse(meta_json);
  wrapped["concepts"] = std::move(arr);
  return wrapped.dump(1) + "\n";
}

ConceptLexicon lexicon_from_json(const std::string& content) {
  json arr;
  try {
    arr = json::parse(content);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("invalid lexicon JSON: ") + e.what());
  }
  if (arr.is_object() && arr.contains("concepts")) arr = json(arr["concepts"]);
  if (!arr.is_array()) throw ParseError("lexicon JSON must be an array");
  ConceptLexicon lex;
  for (const json& c : arr) {
    if (!c.is_object() || !c.contains("concept_id") || !c.contains("preferred")) {
      throw ParseError("lexicon entry needs concept_id and preferred");
    }
    std::vector<std::string> syn =
        c.value("synonyms", std::vector<std::string>{});
    std::vector<std::string> sources = c.value("sources", std::vector<std::string>{});
    const auto id = c["concept_id"].get<std::string>();
    const auto preferred = c["preferred"].get<std::string>();
    if (sources.empty()) {
      lex.add(id, preferred, syn, "");
    }
    for (const auto& s : sources) lex.add(id, preferred, syn, s);
  }
  return lex;
}

void save_lexicon(const ConceptLexicon& lexicon, const std::string& path,
                  const std::string& meta_json) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << lexicon_to_json(lexicon, meta_json);
}

ConceptLexicon load_lexicon(const std::string& path) {
  return lexicon_from_json(read_file(path));
}

}  // namespace driftforge
