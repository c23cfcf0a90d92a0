#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "replyset/commands.hpp"

namespace fs = std::filesystem;
using replyset::cli::run;

namespace {

const fs::path kFixtures = REPLYSET_FIXTURE_DIR;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result call(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<nlohmann::json> read_lines(const fs::path& p) {
  std::vector<nlohmann::json> lines;
  std::ifstream in(p);
  std::string line;
  while (std::getline(in, line)) lines.push_back(nlohmann::json::parse(line));
  return lines;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("replyset_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<std::string> workspace_flags(const fs::path& dir) {
  return {"--pool", (dir / "pool.jsonl").string(), "--pool-matrix", (dir / "pool.emb").string(),
          "--encoder", (dir / "encoder.json").string()};
}

std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

// ingest -> encode -> bootstrap -> predict (every strategy) -> evaluate.
void run_pipeline(const fs::path& dir, const std::string& threads) {
  const std::string train = (kFixtures / "train.jsonl").string();
  const std::string test = (kFixtures / "test.jsonl").string();
  const std::vector<std::string> global = {"--threads", threads, "--seed", "3"};
  REQUIRE(call(concat(global, {"ingest", "--corpus", train, "-o", (dir / "pool.jsonl").string()})).code == 0);
  REQUIRE(call(concat(global, {"encode", "--pool", (dir / "pool.jsonl").string(), "--corpus", train,
                               "--test-corpus", test, "--dim", "128", "--out-dir", dir.string()}))
              .code == 0);
  REQUIRE(call(concat(concat(global, {"bootstrap", "--corpus", train, "--n", "20", "--m", "20", "-o",
                                      (dir / "bootstrap.jsonl").string()}),
                      workspace_flags(dir)))
              .code == 0);
  for (const std::string strategy : {"matching", "mmr", "topic", "planner-online", "planner-offline"}) {
    const auto r = call(concat(concat(global, {"predict", "--strategy", strategy, "--test-corpus", test,
                                               "--n-topics", "5", "-o",
                                               (dir / ("pred_" + strategy + ".jsonl")).string()}),
                               workspace_flags(dir)));
    REQUIRE_MESSAGE(r.code == 0, r.err);
    REQUIRE(call(concat(global, {"evaluate", "--predictions", (dir / ("pred_" + strategy + ".jsonl")).string(),
                                 "--test-corpus", test, "-o",
                                 (dir / ("report_" + strategy + ".json")).string()}))
                .code == 0);
  }
}

}  // namespace

TEST_CASE("help exits 0") {
  const auto r = call({"--help"});
  CHECK(r.code == 0);
  CHECK(r.out.find("bootstrap") != std::string::npos);
}

TEST_CASE("usage errors exit 1 with a JSON error line") {
  for (const auto& args : std::vector<std::vector<std::string>>{
           {"predict", "--strategy", "random", "--test-corpus", "x"},
           {"ingest", "--bogus"},
           {"bootstrap", "--k", "0"},
           {},
           {"ingest"}}) {
    const auto r = call(args);
    CHECK(r.code == 1);
    const auto err = nlohmann::json::parse(r.err);
    CHECK(err.at("error") == "usage");
    CHECK_FALSE(err.at("message").get<std::string>().empty());
  }
}

TEST_CASE("data errors exit 2 and name the problem") {
  const auto dir = fresh_dir("errors");
  auto r = call({"ingest", "--corpus", (kFixtures / "malformed.jsonl").string(), "-o", (dir / "p.jsonl").string()});
  CHECK(r.code == 2);
  auto err = nlohmann::json::parse(r.err);
  CHECK(err.at("error") == "data");
  CHECK(err.at("message").get<std::string>().find("line 2") != std::string::npos);

  r = call({"ingest", "--corpus", (dir / "missing.jsonl").string(), "-o", (dir / "p.jsonl").string()});
  CHECK(r.code == 2);

  std::ofstream(dir / "bad.emb") << "XXXX";
  std::ofstream(dir / "pool.jsonl") << R"({"reply_id":0,"text":"a","lm_bias":-1.0})" << "\n";
  r = call({"predict", "--test-corpus", (kFixtures / "test.jsonl").string(), "--pool",
            (dir / "pool.jsonl").string(), "--pool-matrix", (dir / "bad.emb").string(), "-o",
            (dir / "out.jsonl").string()});
  CHECK(r.code == 2);
  CHECK(nlohmann::json::parse(r.err).at("message").get<std::string>().find("bad magic") != std::string::npos);
}

TEST_CASE("full pipeline writes well-formed artifacts") {
  const auto dir = fresh_dir("pipeline");
  run_pipeline(dir, "1");
  for (const char* name : {"encoder.json", "pool.emb", "pool.emb.meta.json", "corpus_messages.emb",
                           "corpus_replies.emb", "test_messages.emb", "test_replies.emb"})
    CHECK_MESSAGE(fs::exists(dir / name), name);

  const auto pool = read_lines(dir / "pool.jsonl");
  REQUIRE(pool.front().contains("header"));
  CHECK(pool.front()["header"].contains("input_hash"));
  CHECK(pool.size() == 1 + 39);  // one duplicated reply in the 40 pairs

  const auto boot = read_lines(dir / "bootstrap.jsonl");
  REQUIRE(boot.size() == 1 + 40);
  CHECK(boot.front()["header"]["k"] == "3");
  for (std::size_t i = 1; i < boot.size(); ++i) {
    CHECK(boot[i]["message_id"] == i - 1);
    const auto ids = boot[i]["reply_ids"].get<std::vector<std::uint32_t>>();
    CHECK(std::set<std::uint32_t>(ids.begin(), ids.end()).size() == 3);
  }

  const auto report = nlohmann::json::parse(slurp(dir / "report_planner-offline.json"));
  CHECK(report["n"] == 8);
  CHECK(report["rouge"].get<double>() >= 0.0);
  CHECK(report["rouge"].get<double>() <= 100.0);
  CHECK(report.contains("per_example"));

  // The bootstrap file also evaluates: its extra keys are ignored.
  const auto r = call({"evaluate", "--predictions", (dir / "bootstrap.jsonl").string(), "--test-corpus",
                       (kFixtures / "train.jsonl").string()});
  CHECK(r.code == 0);
  CHECK(r.out.find("ROUGE") != std::string::npos);
}

TEST_CASE("echoed ground truth evaluates to ROUGE 100") {
  const auto dir = fresh_dir("echo");
  const std::string train = (kFixtures / "train.jsonl").string();
  const std::string echo = (kFixtures / "echo.jsonl").string();
  REQUIRE(call({"ingest", "--corpus", train, "-o", (dir / "pool.jsonl").string()}).code == 0);
  REQUIRE(call({"encode", "--pool", (dir / "pool.jsonl").string(), "--corpus", train, "--out-dir", dir.string()}).code == 0);
  REQUIRE(call(concat({"predict", "--strategy", "matching", "--beta", "0", "--test-corpus", echo, "-o",
                       (dir / "pred.jsonl").string()},
                      workspace_flags(dir)))
              .code == 0);
  const auto r = call({"evaluate", "--predictions", (dir / "pred.jsonl").string(), "--test-corpus", echo,
                       "-o", (dir / "report.json").string()});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("100.00") != std::string::npos);
  CHECK(nlohmann::json::parse(slurp(dir / "report.json"))["rouge"].get<double>() == doctest::Approx(100.0));
}

TEST_CASE("reruns are byte-identical across thread counts and directories") {
  const auto a = fresh_dir("det_a");
  const auto b = fresh_dir("det_b");
  run_pipeline(a, "1");
  run_pipeline(b, "4");
  std::size_t compared = 0;
  for (const auto& entry : fs::directory_iterator(a)) {
    const auto name = entry.path().filename();
    REQUIRE(fs::exists(b / name));
    CHECK_MESSAGE(slurp(a / name) == slurp(b / name), name.string());
    ++compared;
  }
  CHECK(compared >= 20);
}

TEST_CASE("config file values sit between defaults and flags") {
  const auto dir = fresh_dir("config");
  const std::string train = (kFixtures / "train.jsonl").string();
  REQUIRE(call({"ingest", "--corpus", train, "-o", (dir / "pool.jsonl").string()}).code == 0);
  REQUIRE(call({"encode", "--pool", (dir / "pool.jsonl").string(), "--corpus", train, "--out-dir", dir.string()}).code == 0);
  std::ofstream(dir / "run.cfg") << "# planner\nk = 2\nlambda = 0.5\ncorpus = " << train << "\n";
  const auto base = concat({"--config", (dir / "run.cfg").string(), "bootstrap"}, workspace_flags(dir));

  REQUIRE(call(concat(base, {"-o", (dir / "from_file.jsonl").string()})).code == 0);
  auto lines = read_lines(dir / "from_file.jsonl");
  CHECK(lines[0]["header"]["k"] == "2");
  CHECK(lines[0]["header"]["lambda"] == "0.5");
  CHECK(lines[0]["header"]["alpha"] == "0.75");
  CHECK(lines[1]["reply_ids"].size() == 2);

  REQUIRE(call(concat(base, {"--k", "4", "-o", (dir / "from_flag.jsonl").string()})).code == 0);
  lines = read_lines(dir / "from_flag.jsonl");
  CHECK(lines[0]["header"]["k"] == "4");
  CHECK(lines[0]["header"]["lambda"] == "0.5");
  CHECK(lines[1]["reply_ids"].size() == 4);

  std::ofstream(dir / "bad.cfg") << "nonsense_key = 1\n";
  const auto r = call({"--config", (dir / "bad.cfg").string(), "ingest"});
  CHECK(r.code == 1);
  CHECK(r.err.find("nonsense_key") != std::string::npos);
}

TEST_CASE("installed binary runs") {
  const std::string cmd = std::string("\"") + REPLYSET_CLI_PATH + "\" --help > /dev/null";
  CHECK(std::system(cmd.c_str()) == 0);
}
