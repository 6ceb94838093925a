#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "coldsan/commands.hpp"
#include "coldsan/config.hpp"
#include "coldsan/corpus_io.hpp"
#include "coldsan/error.hpp"
#include "coldsan/experiment.hpp"
#include "coldsan/model.hpp"

using namespace coldsan;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out, err;
};

Run cli(std::vector<std::string> args) {
    args.insert(args.begin(), "coldsan");
    std::vector<const char*> argv;
    for (const auto& a : args)
        argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

struct TempDir {
    fs::path path;
    TempDir() : path(fs::temp_directory_path() / "coldsan_cli_test") {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string operator/(const std::string& name) const { return (path / name).string(); }
};

std::size_t line_count(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST_CASE("config defaults and strictness") {
    const RunConfig rc;
    CHECK(rc.training.d_h == 64);
    CHECK(rc.seeds.size() == 5);
    CHECK(rc.lambda_grid == std::vector<double>{0.1, 1.0, 1.5, 2.0, 5.0, 10.0});
    CHECK(rc.train_ratio == 0.75);

    RunConfig back;
    apply_json(back, to_json(rc));
    CHECK(to_json(back) == to_json(rc));
    CHECK(fingerprint(to_json(back)) == fingerprint(to_json(rc)));

    RunConfig c;
    CHECK_THROWS_AS(apply_json(c, nlohmann::json{{"trainnig", nlohmann::json::object()}}), ConfigError);
    CHECK_THROWS_AS(apply_json(c, nlohmann::json{{"training", {{"eta", 0.1}, {"typo", 1}}}}), ConfigError);
    CHECK_THROWS_AS(apply_json(c, nlohmann::json{{"training", {{"eta", "fast"}}}}), ConfigError);

    apply_json(c, nlohmann::json{{"training", {{"lambda", 2.0}}}, {"seeds", {7, 8}}});
    CHECK(c.training.lambda == 2.0);
    CHECK(c.seeds == std::vector<std::uint64_t>{7, 8});
    CHECK(fingerprint(to_json(c)) != fingerprint(to_json(rc)));
}

TEST_CASE("generate writes a summary and a reproducible file") {
    TempDir d;
    const auto r = cli({"generate", "--n", "200", "--seed", "3", "--out", d / "a.jsonl"});
    CHECK(r.code == 0);
    CHECK(r.out.find("fake 100, real 100") != std::string::npos);
    CHECK(cli({"generate", "--n", "200", "--seed", "3", "--out", d / "b.jsonl"}).code == 0);
    CHECK(slurp(d / "a.jsonl") == slurp(d / "b.jsonl"));

    const auto s = summarize(load_dataset(d / "a.jsonl"));
    CHECK(s.mean_depth_fake > s.mean_depth_real);

    CHECK(cli({"generate", "--n", "10", "--fake-ratio", "2", "--out", d / "c.jsonl"}).code == exit_config);
    CHECK(cli({"generate", "--n", "10", "--out", d / "missing/dir/c.jsonl"}).code == exit_data);
}

TEST_CASE("train, evaluate and dump embeddings") {
    TempDir d;
    REQUIRE(cli({"generate", "--n", "80", "--d-in", "4", "--out", d / "c.jsonl"}).code == 0);
    const std::vector<std::string> common{"--corpus", d / "c.jsonl", "--epochs", "3", "--d-h", "8", "--seed", "1"};

    auto args = common;
    args.insert(args.begin(), "train");
    for (auto s : {"--out", "", "--trace", "", "--split-out", ""})
        args.push_back(s);
    args[args.size() - 5] = d / "m.ckpt";
    args[args.size() - 3] = d / "m.trace";
    args[args.size() - 1] = d / "m.split";
    const auto t = cli(args);
    REQUIRE(t.code == 0);
    CHECK(line_count(slurp(d / "m.trace")) == 3 + 2);

    const auto e = cli({"eval", "--checkpoint", d / "m.ckpt", "--corpus", d / "c.jsonl", "--split", d / "m.split",
                        "--out", d / "r.jsonl", "--dump-embeddings", d / "e.jsonl"});
    REQUIRE(e.code == 0);
    const auto report = read_report(d / "r.jsonl");
    CHECK(report.seeds.size() == 1);
    CHECK(slurp(d / "r.jsonl").find(R"("columns":["Acc","ma-F1","F1 fake","F1 real"])") != std::string::npos);
    const auto emb = load_embeddings(d / "e.jsonl");
    CHECK(emb.size() == 20);
    for (const auto& rec : emb)
        CHECK(rec.h.size() == 8);

    // rerun: byte-identical artifacts
    CHECK(cli(args).code == 0);
    const auto first = slurp(d / "r.jsonl");
    CHECK(cli({"eval", "--checkpoint", d / "m.ckpt", "--corpus", d / "c.jsonl", "--split", d / "m.split", "--out",
               d / "r.jsonl"})
              .code == 0);
    CHECK(slurp(d / "r.jsonl") == first);

    // checkpoint against a corpus of another width
    REQUIRE(cli({"generate", "--n", "20", "--d-in", "5", "--out", d / "wide.jsonl"}).code == 0);
    const auto bad = cli({"eval", "--checkpoint", d / "m.ckpt", "--corpus", d / "wide.jsonl", "--out", d / "x.jsonl"});
    CHECK(bad.code == exit_data);
    CHECK(bad.err.find("4-dim") != std::string::npos);
}

TEST_CASE("reduced trainer and baseline give identical checkpoints") {
    TempDir d;
    REQUIRE(cli({"generate", "--n", "60", "--d-in", "4", "--out", d / "c.jsonl"}).code == 0);
    for (auto seed : {"0", "1"}) {
        const std::vector<std::string> base{"train", "--corpus", d / "c.jsonl", "--epochs", "4", "--d-h", "8", "--seed", seed};
        auto a = base, b = base;
        for (auto s : {"--adversarial=false", "--lambda=0", "--out"})
            a.push_back(s);
        a.push_back(d / "a.ckpt");
        for (auto s : {"--mode", "vanilla", "--out"})
            b.push_back(s);
        b.push_back(d / "b.ckpt");
        const auto ra = cli(a);
        CHECK(ra.code == 0);
        CHECK(ra.err.find("not on the search grid") != std::string::npos);
        CHECK(cli(b).code == 0);
        CHECK(slurp(d / "a.ckpt") == slurp(d / "b.ckpt"));
    }
}

TEST_CASE("error exit codes") {
    TempDir d;
    const auto missing = cli({"train", "--corpus", d / "nope.jsonl", "--out", d / "m.ckpt"});
    CHECK(missing.code == exit_data);
    CHECK(missing.err.find("nope.jsonl") != std::string::npos);

    REQUIRE(cli({"generate", "--n", "40", "--d-in", "3", "--out", d / "c.jsonl"}).code == 0);
    CHECK(cli({"train", "--corpus", d / "c.jsonl", "--out", d / "m.ckpt", "--epochs", "0"}).code == exit_config);
    CHECK(cli({"train", "--corpus", d / "c.jsonl", "--out", d / "m.ckpt", "--encoder", "rnn"}).code == exit_config);
    CHECK(cli({"train", "--corpus", d / "c.jsonl", "--out", d / "m.ckpt", "--epochs", "3", "--eta", "1e300"}).code ==
          exit_numeric);
    CHECK(cli({"bogus"}).code == exit_config);

    std::ofstream(d / "bad.json") << R"({"training": {"colour": 1}})";
    CHECK(cli({"train", "--config", d / "bad.json", "--corpus", d / "c.jsonl", "--out", d / "m.ckpt"}).code ==
          exit_config);

    // event-aware protocol on a corpus without event tags
    std::string text = slurp(d / "c.jsonl");
    std::string stripped;
    std::istringstream lines(text);
    std::string line;
    bool header = true;
    while (std::getline(lines, line)) {
        if (!header) {
            auto j = nlohmann::json::parse(line);
            j.erase("event");
            line = j.dump();
        }
        header = false;
        stripped += line + "\n";
    }
    std::ofstream(d / "untagged.jsonl") << stripped;
    CHECK(cli({"eval", "--corpus", d / "untagged.jsonl", "--protocol", "event-aware", "--seeds", "0", "--epochs", "2",
               "--d-h", "8", "--out", d / "r.jsonl"})
              .code == exit_config);
}

TEST_CASE("experiment mode, merge and report") {
    TempDir d;
    REQUIRE(cli({"generate", "--n", "60", "--d-in", "4", "--events", "3", "--out", d / "c.jsonl"}).code == 0);
    const std::vector<std::string> common{"eval", "--corpus", d / "c.jsonl", "--epochs", "2", "--d-h", "8"};
    for (auto seed : {"0", "1"}) {
        auto a = common;
        for (auto s : {"--seeds", seed, "--out"})
            a.push_back(s);
        a.push_back(d / (std::string("part") + seed + ".jsonl"));
        CHECK(cli(a).code == 0);
    }
    auto both = common;
    for (auto s : {"--seeds", "0,1", "--out"})
        both.push_back(s);
    both.push_back(d / "both.jsonl");
    CHECK(cli(both).code == 0);

    const auto r = cli({"report", d / "part1.jsonl", d / "part0.jsonl", "--out", d / "merged.jsonl"});
    CHECK(r.code == 0);
    CHECK(slurp(d / "merged.jsonl") == slurp(d / "both.jsonl"));
    CHECK(r.out.find("Acc") != std::string::npos);
    const auto whole = read_report(d / "both.jsonl");

    auto ev = common;
    for (auto s : {"--seeds", "0,1", "--protocol", "event-aware", "--out"})
        ev.push_back(s);
    ev.push_back(d / "event.jsonl");
    CHECK(cli(ev).code == 0);
    const auto er = read_report(d / "event.jsonl");
    CHECK(er.events.size() == 3);
    CHECK(er.seeds[0].event_weighted_f1.size() == 3);
    CHECK(whole.seeds.size() == 2);
}

TEST_CASE("gradcheck command") {
    const auto ok = cli({"gradcheck", "--d-h", "8"});
    CHECK(ok.code == 0);
    CHECK(line_count(ok.out) == 4);
    for (auto name : {"content", "gcn", "gat", "bigcn"})
        CHECK(ok.out.find(name) != std::string::npos);

    const auto broken = cli({"gradcheck", "--d-h", "8", "--corrupt-gradient"});
    CHECK(broken.code == exit_numeric);
    CHECK(broken.out.find("FAIL") != std::string::npos);
}
