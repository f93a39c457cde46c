#pragma once

// Text formats:
//   matrix      first line `rows cols`, then `rows` lines of `cols` decimal floats
//   embeddings  first line `rows cols`, then `rows` lines `class_id v_1 ... v_cols`
//   labels      one class id per line, aligned with feature rows
//   split       `[seen]` and `[unseen]` section headers, one class id per line

#include "phantom/semantic.hpp"
#include "phantom/synthesis.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace phantom {

inline constexpr Index kMaxMatrixEntries = 100'000'000;

Matrix load_matrix(const std::string& path);
Matrix parse_matrix(std::istream& in, const std::string& source = "<stream>");
void save_matrix(const std::string& path, const Matrix& m);
void write_matrix(std::ostream& os, const Matrix& m);

EmbeddingTable load_embeddings(const std::string& path, bool normalize = true);
void save_embeddings(const std::string& path, const std::vector<std::string>& ids, const Matrix& vectors);

std::vector<std::string> load_labels(const std::string& path);
void save_labels(const std::string& path, const std::vector<std::string>& labels);

struct ClassSplit {
    std::vector<std::string> seen;
    std::vector<std::string> unseen;
};

ClassSplit load_split(const std::string& path);
void save_split(const std::string& path, const ClassSplit& split);

// 64-bit FNV-1a of a file's bytes, hex encoded.
std::string file_digest(const std::string& path);

} // namespace phantom
