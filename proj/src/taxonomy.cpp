#include "unseennet/taxonomy.hpp"

#include <algorithm>
#include <cctype>
#include <deque>
#include <fstream>
#include <sstream>

#include "unseennet/errors.hpp"

namespace unseennet {

namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return s;
}

size_t edit_distance(const std::string& a, const std::string& b) {
    std::vector<size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (size_t j = 1; j <= b.size(); ++j) {
            size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

std::string nearest_names(const Taxonomy& t, const std::string& name) {
    std::vector<std::pair<size_t, std::string>> scored;
    for (const auto& n : t.nodes) scored.emplace_back(edit_distance(name, n), n);
    for (const auto& [a, id] : t.aliases) scored.emplace_back(edit_distance(name, a), a);
    std::sort(scored.begin(), scored.end());
    std::string out;
    for (size_t i = 0; i < scored.size() && i < 3; ++i) {
        if (i) out += ", ";
        out += scored[i].second;
    }
    return out;
}

} // namespace

Taxonomy load_taxonomy(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw RuntimeError("taxonomy: cannot open " + path.string());

    Taxonomy t;
    std::vector<std::pair<std::string, std::string>> edges;
    std::string line;
    int lineno = 0;
    bool any_directive = false;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::string kind;
        if (!(ls >> kind)) continue;
        any_directive = true;
        auto where = [&] { return path.filename().string() + ":" + std::to_string(lineno); };
        if (kind == "node") {
            std::string id;
            if (!(ls >> id)) throw ValidationError("taxonomy parse error at " + where() + ": node needs an id");
            id = lower(id);
            if (t.index.count(id))
                throw ValidationError("taxonomy: duplicate node '" + id + "' at " + where());
            t.index[id] = static_cast<int>(t.nodes.size());
            t.nodes.push_back(id);
        } else if (kind == "edge") {
            std::string a, b;
            if (!(ls >> a >> b)) throw ValidationError("taxonomy parse error at " + where() + ": edge needs two ids");
            edges.emplace_back(lower(a), lower(b));
        } else if (kind == "alias") {
            std::string name, id;
            if (!(ls >> name >> id)) throw ValidationError("taxonomy parse error at " + where() + ": alias needs name and id");
            name = lower(name);
            id = lower(id);
            auto it = t.aliases.find(name);
            if (it != t.aliases.end() && it->second != id)
                throw ValidationError("taxonomy: ambiguous alias '" + name + "' at " + where());
            t.aliases[name] = id;
        } else {
            throw ValidationError("taxonomy parse error at " + where() + ": unknown directive '" + kind + "'");
        }
    }
    if (!any_directive) throw ValidationError("taxonomy parse error: " + path.string() + " is empty");

    t.adj.resize(t.nodes.size());
    for (const auto& [a, b] : edges) {
        auto ia = t.index.find(a);
        auto ib = t.index.find(b);
        if (ia == t.index.end() || ib == t.index.end())
            throw ValidationError("taxonomy: edge references unknown node: " + a + " " + b);
        if (ia->second == ib->second)
            throw ValidationError("taxonomy: self-loop on '" + a + "'");
        t.adj[ia->second].push_back(ib->second);
        t.adj[ib->second].push_back(ia->second);
    }
    for (const auto& [name, id] : t.aliases) {
        if (!t.index.count(id))
            throw ValidationError("taxonomy: alias '" + name + "' targets unknown node '" + id + "'");
    }
    return t;
}

std::string resolve_alias(const Taxonomy& t, const std::string& name) {
    const std::string key = lower(name);
    auto it = t.aliases.find(key);
    if (it != t.aliases.end()) return it->second;
    if (t.index.count(key)) return key;
    throw ValidationError("unknown concept name '" + name + "'; nearest: " + nearest_names(t, key));
}

double path_similarity(const Taxonomy& t, const std::string& a, const std::string& b) {
    auto ia = t.index.find(a);
    auto ib = t.index.find(b);
    if (ia == t.index.end()) throw ValidationError("unknown concept '" + a + "'");
    if (ib == t.index.end()) throw ValidationError("unknown concept '" + b + "'");
    if (ia->second == ib->second) return 1.0;

    std::vector<int> dist(t.nodes.size(), -1);
    std::deque<int> q;
    dist[ia->second] = 0;
    q.push_back(ia->second);
    while (!q.empty()) {
        int n = q.front();
        q.pop_front();
        if (n == ib->second) break;
        for (int m : t.adj[n]) {
            if (dist[m] < 0) {
                dist[m] = dist[n] + 1;
                q.push_back(m);
            }
        }
    }
    if (dist[ib->second] < 0) return 0.0;  // disconnected
    return 1.0 / (dist[ib->second] + 1.0);
}

std::vector<std::pair<std::string, double>> nearest_semantic(
    const Taxonomy& t, const std::string& u, const std::vector<std::string>& pool) {
    if (pool.empty()) throw ValidationError("nearest_semantic: empty candidate set");
    std::vector<std::pair<std::string, double>> ranked;
    ranked.reserve(pool.size());
    for (const auto& c : pool) ranked.emplace_back(c, path_similarity(t, u, c));
    std::sort(ranked.begin(), ranked.end(), [](const auto& x, const auto& y) {
        if (x.second != y.second) return x.second > y.second;
        return x.first < y.first;
    });
    return ranked;
}

} // namespace unseennet
