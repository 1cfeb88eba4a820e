#pragma once

#include <filesystem>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace unseennet {

// Concept graph with alias mapping and path-based semantic similarity.
// Immutable after load; safe for concurrent reads.
struct Taxonomy {
    std::vector<std::string> nodes;              // canonical ids, file order
    std::unordered_map<std::string, int> index;  // id -> position in nodes
    std::vector<std::vector<int>> adj;           // undirected is-a links
    std::unordered_map<std::string, std::string> aliases;  // lowercase external name -> id

    bool has(const std::string& id) const { return index.count(id) > 0; }
};

// Parses the line-oriented taxonomy format:
//   node <id>
//   edge <id> <id>
//   alias <external-name> <id>
// '#' starts a comment. Rejects dangling edges, duplicate ids, self-loops
// and ambiguous aliases.
Taxonomy load_taxonomy(const std::filesystem::path& path);

// Case-insensitive lookup through aliases, then canonical ids. Unknown names
// raise a ValidationError listing the nearest string matches.
std::string resolve_alias(const Taxonomy& t, const std::string& name);

// s_s = 1 / (shortest-path edges + 1); 0.0 for disconnected pairs.
double path_similarity(const Taxonomy& t, const std::string& a, const std::string& b);

// Pool sorted by path similarity to u, descending; ties broken
// lexicographically by id. First element is the fine-tuning source class.
std::vector<std::pair<std::string, double>> nearest_semantic(
    const Taxonomy& t, const std::string& u, const std::vector<std::string>& pool);

} // namespace unseennet
