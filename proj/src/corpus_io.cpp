#include "coldsan/corpus_io.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "coldsan/error.hpp"
#include "coldsan/featurizer.hpp"

namespace coldsan {

using nlohmann::json;

namespace {

constexpr const char* kFormat = "coldsan-corpus";

std::vector<double> read_features(const json& j, std::size_t d_in, std::uint64_t featurizer_seed) {
    if (j.is_string())
        return hash_features(j.get<std::string>(), d_in, featurizer_seed);
    if (!j.is_array())
        throw ParseError("feature vector must be an array of numbers or a text string");
    std::vector<double> out;
    out.reserve(j.size());
    for (const auto& v : j) {
        if (!v.is_number())
            throw ParseError("feature vector contains a non-number");
        out.push_back(v.get<double>());
    }
    return out;
}

NewsSample parse_record(const json& r, std::size_t d_in, std::uint64_t featurizer_seed) {
    static const std::set<std::string> known{"id", "label", "event", "x", "text", "tree"};
    for (const auto& [k, _] : r.items())
        if (!known.contains(k))
            throw ParseError("unknown field '" + k + "'");

    NewsSample s;
    s.id = r.at("id").get<std::string>();
    s.label = parse_label(r.at("label").get<std::string>());
    if (r.contains("event") && !r["event"].is_null())
        s.event = r["event"].get<std::string>();
    if (r.contains("x"))
        s.x = read_features(r["x"], d_in, featurizer_seed);
    else if (r.contains("text"))
        s.x = hash_features(r["text"].get<std::string>(), d_in, featurizer_seed);
    else
        throw ParseError("record has neither 'x' nor 'text'");
    if (s.x.size() != d_in)
        throw ParseError("x has " + std::to_string(s.x.size()) + " dimensions, manifest says " + std::to_string(d_in));

    if (r.contains("tree") && !r["tree"].is_null()) {
        const auto& t = r["tree"];
        PropagationTree tree;
        tree.root_id = t.at("root_id").get<std::string>();
        for (const auto& n : t.at("nodes")) {
            if (!n.is_array() || n.size() != 3)
                throw ParseError("tree node must be [node_id, timestamp_order, features]");
            tree.nodes.push_back({n[0].get<std::string>(), n[1].get<long long>(),
                                  read_features(n[2], d_in, featurizer_seed)});
        }
        for (const auto& e : t.at("edges")) {
            if (!e.is_array() || e.size() != 2)
                throw ParseError("tree edge must be [parent_id, child_id]");
            tree.edges.push_back({e[0].get<std::string>(), e[1].get<std::string>()});
        }
        tree.validate(s.id, s.x);
        s.tree = std::move(tree);
    }
    return s;
}

json to_json(const NewsSample& s) {
    json r;
    r["id"] = s.id;
    r["label"] = std::string(to_string(s.label));
    if (s.event)
        r["event"] = *s.event;
    r["x"] = s.x;
    if (s.tree) {
        json nodes = json::array();
        for (const auto& n : s.tree->nodes)
            nodes.push_back(json::array({n.id, n.order, n.features}));
        json edges = json::array();
        for (const auto& e : s.tree->edges)
            edges.push_back(json::array({e.parent, e.child}));
        r["tree"] = {{"root_id", s.tree->root_id}, {"nodes", std::move(nodes)}, {"edges", std::move(edges)}};
    }
    return r;
}

}  // namespace

Corpus parse_corpus(const std::string& text, const std::string& source) {
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    bool have_manifest = false;
    std::size_t d_in = 0, count = 0;
    std::uint64_t featurizer_seed = 0;
    Corpus out;
    std::set<std::string> ids;

    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        const std::string where = source + ":" + std::to_string(line_no);
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw ParseError(where + ": malformed JSON: " + e.what());
        }
        if (!have_manifest) {
            if (!j.is_object() || j.value("format", "") != kFormat)
                throw ParseError(where + ": expected corpus manifest with format \"" + kFormat + "\"");
            try {
                d_in = j.at("d_in").get<std::size_t>();
                count = j.at("count").get<std::size_t>();
                featurizer_seed = j.value("featurizer_seed", std::uint64_t{0});
            } catch (const json::exception& e) {
                throw ParseError(where + ": bad manifest: " + e.what());
            }
            have_manifest = true;
            continue;
        }
        std::string rid = j.is_object() && j.contains("id") && j["id"].is_string() ? j["id"].get<std::string>()
                                                                                  : "<no id>";
        try {
            out.push_back(parse_record(j, d_in, featurizer_seed));
        } catch (const StructureError&) {
            throw;
        } catch (const Error& e) {
            throw ParseError(where + " (record '" + rid + "'): " + e.what());
        } catch (const json::exception& e) {
            throw ParseError(where + " (record '" + rid + "'): " + e.what());
        }
        if (!ids.insert(out.back().id).second)
            throw ParseError(where + ": duplicate sample id '" + rid + "'");
    }
    if (have_manifest && out.size() != count)
        throw ParseError(source + ": manifest declares " + std::to_string(count) + " samples, file holds " +
                         std::to_string(out.size()));
    return out;
}

Corpus load_dataset(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open corpus file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_corpus(buf.str(), path.string());
}

std::size_t corpus_dimension(const Corpus& corpus) { return corpus.empty() ? 0 : corpus.front().x.size(); }

std::string serialize_corpus(const Corpus& corpus) {
    const std::size_t d_in = corpus_dimension(corpus);
    for (const auto& s : corpus)
        if (s.x.size() != d_in)
            throw DataError("sample '" + s.id + "' has dimension " + std::to_string(s.x.size()) + ", expected " +
                            std::to_string(d_in));
    std::string out = json{{"format", kFormat}, {"version", 1}, {"d_in", d_in}, {"count", corpus.size()}}.dump();
    out += '\n';
    for (const auto& s : corpus) {
        out += to_json(s).dump();
        out += '\n';
    }
    return out;
}

void save_dataset(const Corpus& corpus, const std::filesystem::path& path) {
    const std::string text = serialize_corpus(corpus);
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot write corpus file " + path.string());
    out << text;
    if (!out)
        throw IoError("write failed for " + path.string());
}

}  // namespace coldsan
