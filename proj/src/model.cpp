#include "coldsan/model.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "coldsan/error.hpp"
#include "coldsan/graph_batch.hpp"
#include "coldsan/ops.hpp"

namespace coldsan {

using nlohmann::json;

Model make_model(const ModelConfig& config, std::uint64_t seed) {
    return {config, seed, init_params(config, seed)};
}

std::vector<HiddenRep> encode_samples(const Model& model, std::span<const NewsSample> samples,
                                      std::size_t batch_size) {
    std::vector<HiddenRep> out;
    out.reserve(samples.size());
    for (std::size_t lo = 0; lo < samples.size(); lo += batch_size) {
        const std::size_t hi = std::min(samples.size(), lo + batch_size);
        std::vector<SampleGraph> graphs;
        for (std::size_t i = lo; i < hi; ++i) {
            if (samples[i].x.size() != model.config.d_in)
                throw DimensionError("sample '" + samples[i].id + "' has " + std::to_string(samples[i].x.size()) +
                                     " features, model expects " + std::to_string(model.config.d_in));
            graphs.push_back(to_graph(samples[i]));
        }
        const GraphBatch batch = make_batch(std::span<const SampleGraph>(graphs));
        GradTape tape(false);
        const Tensor& h = tape.value(encode(tape, model.config, model.params, batch));
        for (std::size_t r = 0; r < h.rows(); ++r) {
            auto row = h.row(r);
            out.push_back({{row.begin(), row.end()}, batch.has_structure[r]});
        }
    }
    return out;
}

HiddenRep encode_sample(const Model& model, const NewsSample& sample) {
    return encode_samples(model, std::span<const NewsSample>(&sample, 1)).front();
}

namespace {

Tensor head_logits(const ParamSets& params, ParamGroupKind g, std::span<const double> h, const char* prefix) {
    const Tensor& w = params.at(params.find(g, std::string(prefix) + ".w"));
    const Tensor& b = params.at(params.find(g, std::string(prefix) + ".b"));
    if (w.rows() != h.size())
        throw DimensionError("head expects h of dimension " + std::to_string(w.rows()) + ", got " +
                             std::to_string(h.size()));
    Tensor logits({1, w.cols()}, 0.0);
    for (std::size_t j = 0; j < w.cols(); ++j) {
        double s = b[j];
        for (std::size_t i = 0; i < h.size(); ++i)
            s += h[i] * w.at(i, j);
        logits[j] = s;
    }
    return softmax_rows(logits);
}

}  // namespace

std::array<double, 2> classify(const ParamSets& params, std::span<const double> h) {
    const Tensor p = head_logits(params, ParamGroupKind::classifier, h, "cls");
    return {p[0], p[1]};
}

double discriminate(const ParamSets& params, std::span<const double> h, double coeff) {
    if (!(coeff >= 0.0))
        throw ConfigError("gradient reversal coefficient must be nonnegative");
    return head_logits(params, ParamGroupKind::discriminator, h, "disc")[1];
}

std::string serialize_checkpoint(const Model& model) {
    std::string out = json{{"format", "coldsan-checkpoint"},
                           {"encoder", std::string(to_string(model.config.encoder))},
                           {"d_in", model.config.d_in},
                           {"d_h", model.config.d_h},
                           {"gat_heads", model.config.gat_heads},
                           {"seed", model.seed}}
                          .dump();
    out += '\n';
    for (const auto& id : model.params.ids()) {
        const auto& p = model.params.group(id.group)[id.index];
        auto vals = p.value.values();
        out += json{{"group", std::string(to_string(id.group))},
                    {"name", p.name},
                    {"shape", p.value.shape()},
                    {"values", std::vector<double>(vals.begin(), vals.end())}}
                   .dump();
        out += '\n';
    }
    return out;
}

Model parse_checkpoint(const std::string& text, const std::string& source) {
    std::istringstream in(text);
    std::string line;
    Model m;
    bool header = false;
    std::size_t line_no = 0;
    try {
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty())
                continue;
            const auto j = json::parse(line);
            if (!header) {
                if (j.value("format", "") != "coldsan-checkpoint")
                    throw ParseError(source + ": not a checkpoint file");
                m.config.encoder = parse_encoder_kind(j.at("encoder").get<std::string>());
                m.config.d_in = j.at("d_in").get<std::size_t>();
                m.config.d_h = j.at("d_h").get<std::size_t>();
                m.config.gat_heads = j.at("gat_heads").get<std::size_t>();
                m.seed = j.at("seed").get<std::uint64_t>();
                header = true;
                continue;
            }
            m.params.add(parse_param_group(j.at("group").get<std::string>()), j.at("name").get<std::string>(),
                         Tensor(j.at("shape").get<std::vector<std::size_t>>(),
                                j.at("values").get<std::vector<double>>()));
        }
    } catch (const json::exception& e) {
        throw ParseError(source + ":" + std::to_string(line_no) + ": " + e.what());
    }
    if (!header)
        throw ParseError(source + ": empty checkpoint");
    // Shapes must match what this configuration would build.
    const ParamSets expected = init_params(m.config, 0);
    for (const auto& id : expected.ids()) {
        const auto& want = expected.group(id.group)[id.index];
        const auto& have = m.params.at(m.params.find(id.group, want.name));
        if (have.shape() != want.value.shape())
            throw ParseError(source + ": parameter " + want.name + " has shape " + shape_string(have.shape()) +
                             ", expected " + shape_string(want.value.shape()));
    }
    if (m.params.ids().size() != expected.ids().size())
        throw ParseError(source + ": unexpected extra parameters");
    return m;
}

void save_checkpoint(const Model& model, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot write checkpoint " + path.string());
    out << serialize_checkpoint(model);
}

Model load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open checkpoint " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_checkpoint(buf.str(), path.string());
}

}  // namespace coldsan
