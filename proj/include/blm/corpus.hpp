#pragma once
// Labeled token-count corpus ingestion. Input format: one document per
// line, `label<TAB>token token token ...`, UTF-8, LF line endings (a
// trailing CR is tolerated). The vocabulary is built from the training file
// in first-appearance order; test tokens outside it are dropped (a test
// document may legitimately become an all-zero row).

#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "blm/counts.hpp"

namespace blm {

struct Corpus {
  std::vector<std::string> vocabulary;    // column order of the matrices
  std::vector<std::string> class_labels;  // first-appearance order
  std::vector<std::size_t> doc_class;     // per document
  std::vector<std::vector<std::uint32_t>> rows;  // per document, |vocabulary| wide

  std::size_t documents() const { return rows.size(); }

  CountMatrix matrix() const {
    std::vector<std::uint32_t> flat;
    flat.reserve(rows.size() * vocabulary.size());
    for (const auto& r : rows) flat.insert(flat.end(), r.begin(), r.end());
    return CountMatrix(rows.size(), vocabulary.size(), std::move(flat));
  }

  // One matrix per class, class order matching class_labels.
  std::vector<CountMatrix> per_class_matrices() const {
    std::vector<std::vector<std::uint32_t>> flat(class_labels.size());
    std::vector<std::size_t> counts(class_labels.size(), 0);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      auto& f = flat[doc_class[i]];
      f.insert(f.end(), rows[i].begin(), rows[i].end());
      ++counts[doc_class[i]];
    }
    std::vector<CountMatrix> out;
    out.reserve(class_labels.size());
    for (std::size_t c = 0; c < class_labels.size(); ++c)
      out.emplace_back(counts[c], vocabulary.size(), std::move(flat[c]));
    return out;
  }
};

struct IngestResult {
  Corpus train;
  Corpus test;
};

namespace detail {

struct ParsedDoc {
  std::string label;
  std::vector<std::string> tokens;
};

inline std::vector<ParsedDoc> parse_corpus_file(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("cannot open corpus file: " + path);
  std::vector<ParsedDoc> docs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": missing tab between label and tokens");
    ParsedDoc doc;
    doc.label = line.substr(0, tab);
    if (doc.label.empty())
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": empty label");
    std::istringstream rest(line.substr(tab + 1));
    std::string tok;
    while (rest >> tok) doc.tokens.push_back(std::move(tok));
    docs.push_back(std::move(doc));
  }
  return docs;
}

}  // namespace detail

// Ingests a training file, building the vocabulary and class set from it in
// first-appearance order.
inline Corpus ingest_training(const std::string& path) {
  const auto docs = detail::parse_corpus_file(path);
  if (docs.empty())
    throw std::runtime_error("corpus file has no documents: " + path);
  Corpus c;
  std::unordered_map<std::string, std::size_t> vocab_index, class_index;
  std::vector<std::unordered_map<std::size_t, std::uint32_t>> sparse;
  for (const auto& doc : docs) {
    auto [cit, cnew] = class_index.try_emplace(doc.label, c.class_labels.size());
    if (cnew) c.class_labels.push_back(doc.label);
    c.doc_class.push_back(cit->second);
    sparse.emplace_back();
    for (const auto& tok : doc.tokens) {
      auto [vit, vnew] = vocab_index.try_emplace(tok, c.vocabulary.size());
      if (vnew) c.vocabulary.push_back(tok);
      ++sparse.back()[vit->second];
    }
  }
  if (c.vocabulary.size() < 2)
    throw std::runtime_error("training corpus has fewer than 2 distinct tokens: " + path);
  c.rows.assign(sparse.size(), std::vector<std::uint32_t>(c.vocabulary.size(), 0));
  for (std::size_t i = 0; i < sparse.size(); ++i)
    for (auto [d, k] : sparse[i]) c.rows[i][d] = k;
  return c;
}

// Ingests a file against an existing vocabulary/class set (tokens outside
// the vocabulary are dropped; unseen labels extend the class list).
inline Corpus ingest_against(const std::string& path, const Corpus& reference) {
  const auto docs = detail::parse_corpus_file(path);
  Corpus c;
  c.vocabulary = reference.vocabulary;
  c.class_labels = reference.class_labels;
  std::unordered_map<std::string, std::size_t> vocab_index, class_index;
  for (std::size_t d = 0; d < c.vocabulary.size(); ++d) vocab_index[c.vocabulary[d]] = d;
  for (std::size_t k = 0; k < c.class_labels.size(); ++k) class_index[c.class_labels[k]] = k;
  for (const auto& doc : docs) {
    auto [cit, cnew] = class_index.try_emplace(doc.label, c.class_labels.size());
    if (cnew) c.class_labels.push_back(doc.label);
    c.doc_class.push_back(cit->second);
    std::vector<std::uint32_t> row(c.vocabulary.size(), 0);
    for (const auto& tok : doc.tokens) {
      auto it = vocab_index.find(tok);
      if (it != vocab_index.end()) ++row[it->second];
    }
    c.rows.push_back(std::move(row));
  }
  return c;
}

// Train/test pair sharing the training vocabulary and class order.
inline IngestResult ingest_corpus(const std::string& train_path,
                                  const std::string& test_path) {
  IngestResult r;
  r.train = ingest_training(train_path);
  r.test = ingest_against(test_path, r.train);
  return r;
}

// Reorders corpus columns so `token` is the final category (the one the BLM
// family models separately); class and document order are untouched.
inline Corpus with_last_token(const Corpus& c, const std::string& token) {
  std::size_t idx = c.vocabulary.size();
  for (std::size_t d = 0; d < c.vocabulary.size(); ++d)
    if (c.vocabulary[d] == token) idx = d;
  if (idx == c.vocabulary.size())
    throw std::runtime_error("token not in vocabulary: " + token);
  Corpus out;
  out.class_labels = c.class_labels;
  out.doc_class = c.doc_class;
  out.vocabulary.reserve(c.vocabulary.size());
  for (std::size_t d = 0; d < c.vocabulary.size(); ++d)
    if (d != idx) out.vocabulary.push_back(c.vocabulary[d]);
  out.vocabulary.push_back(c.vocabulary[idx]);
  out.rows.reserve(c.rows.size());
  for (const auto& r : c.rows) {
    std::vector<std::uint32_t> row;
    row.reserve(r.size());
    for (std::size_t d = 0; d < r.size(); ++d)
      if (d != idx) row.push_back(r[d]);
    row.push_back(r[idx]);
    out.rows.push_back(std::move(row));
  }
  return out;
}

}  // namespace blm
