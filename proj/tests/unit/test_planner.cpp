#include <doctest.h>

#include <cmath>
#include <numeric>
#include <set>

#include "replyset/encoder.hpp"
#include "replyset/error.hpp"
#include "replyset/planner.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

using namespace replyset;

namespace {

struct Instance {
  std::vector<TokenList> candidates;
  std::vector<ReplyId> candidate_ids;
  std::vector<TokenList> simulated;
  std::vector<double> probs;
  std::vector<TokenBag> candidate_bags;
  std::vector<TokenBag> simulated_bags;

  SelectionProblem problem() const {
    SelectionProblem p;
    p.candidate_ids = candidate_ids;
    for (const auto& b : candidate_bags) p.candidate_bags.emplace_back(b);
    for (const auto& b : simulated_bags) p.simulated_bags.emplace_back(b);
    p.probs = probs;
    return p;
  }
};

Instance make_instance(std::vector<TokenList> candidates, std::vector<ReplyId> ids,
                       std::vector<TokenList> simulated, std::vector<double> probs) {
  Instance inst{std::move(candidates), std::move(ids), std::move(simulated), std::move(probs), {}, {}};
  TokenInterner interner;
  for (const auto& c : inst.candidates) inst.candidate_bags.push_back(interner.bag(c));
  for (const auto& s : inst.simulated) inst.simulated_bags.push_back(interner.bag(s));
  return inst;
}

TokenList split(const std::string& s) { return normalize_and_tokenize(s); }

// A random instance drawn from a pool of at most 50 short replies over a
// small vocabulary, so overlaps and exact ties are common.
Instance random_instance(std::mt19937_64& rng) {
  const std::size_t pool_size = synthetic::uniform(rng, 5, 50);
  const auto pool = synthetic::random_replies(rng, pool_size, 6, 1, 4);
  std::vector<std::size_t> order(pool_size);
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = pool_size; i > 1; --i) std::swap(order[i - 1], order[synthetic::uniform(rng, 0, i - 1)]);
  const std::size_t n = synthetic::uniform(rng, 3, std::min<std::size_t>(12, pool_size));
  const std::size_t m = synthetic::uniform(rng, 1, std::min<std::size_t>(20, pool_size));
  std::vector<TokenList> cands, sims;
  std::vector<ReplyId> ids;
  for (std::size_t i = 0; i < n; ++i) {
    cands.push_back(split(pool[order[i]]));
    ids.push_back(static_cast<ReplyId>(order[i]));
  }
  std::vector<double> scores;
  for (std::size_t i = 0; i < m; ++i) {
    sims.push_back(split(pool[order[(i * 7 + 3) % pool_size]]));
    scores.push_back(static_cast<double>(synthetic::uniform(rng, 0, 4)) * 0.5);
  }
  return make_instance(cands, ids, sims, oracle::softmax(scores));
}

}  // namespace

TEST_CASE("PlannerConfig defaults and validation") {
  PlannerConfig cfg;
  CHECK(cfg.n_candidates == 100);
  CHECK(cfg.n_simulations == 100);
  CHECK(cfg.set_size == 3);
  CHECK(cfg.alpha == 0.75);
  CHECK(cfg.lambda == 0.05);
  CHECK_NOTHROW(cfg.validate());
  auto bad = cfg;
  bad.set_size = 101;
  CHECK_THROWS_AS(bad.validate(), UsageError);
  bad = cfg;
  bad.n_simulations = 0;
  CHECK_THROWS_AS(bad.validate(), UsageError);
  bad = cfg;
  bad.alpha = -0.1;
  CHECK_THROWS_AS(bad.validate(), UsageError);
  bad = cfg;
  bad.lambda = -1.0;
  CHECK_THROWS_AS(bad.validate(), UsageError);
}

TEST_CASE("simulate_user softmax examples") {
  const std::vector<ReplyId> ids4 = {0, 1, 2, 3};
  const std::vector<double> equal = {0.3, 0.3, 0.3, 0.3};
  for (double p : simulate_user(equal, ids4).probs) CHECK(p == doctest::Approx(0.25));

  const std::vector<ReplyId> ids2 = {5, 9};
  const std::vector<double> scores = {std::log(2.0), 0.0};
  const auto user = simulate_user(scores, ids2);
  CHECK(user.probs[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(user.probs[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(user.reply_ids == ids2);
  CHECK(user.entropy() == doctest::Approx(-(2.0 / 3) * std::log(2.0 / 3) - (1.0 / 3) * std::log(1.0 / 3)));

  const std::vector<double> one = {-4.0};
  CHECK(simulate_user(one, std::vector<ReplyId>{0}).probs == std::vector<double>{1.0});
  CHECK_THROWS_AS(simulate_user(std::vector<double>{}, std::vector<ReplyId>{}), DataError);
  CHECK_THROWS_AS(simulate_user(std::vector<double>{NAN}, std::vector<ReplyId>{0}), DataError);
}

TEST_CASE("simulated probabilities are positive and sum to one") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t m = synthetic::uniform(rng, 1, 100);
    std::vector<double> scores(m);
    std::vector<ReplyId> ids(m);
    for (std::size_t i = 0; i < m; ++i) {
      scores[i] = synthetic::unit(rng) * 40.0 - 20.0;
      ids[i] = static_cast<ReplyId>(i);
    }
    const auto user = simulate_user(scores, ids);
    REQUIRE(std::accumulate(user.probs.begin(), user.probs.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-9));
    for (double p : user.probs) REQUIRE(p > 0.0);
  }
}

TEST_CASE("set_similarity and expected_similarity examples") {
  const std::vector<TokenList> empty;
  const TokenList y = {"b", "c"};
  CHECK(set_similarity(std::vector<TokenList>{y}, y) == 1.0);
  CHECK(set_similarity(empty, y) == 0.0);
  CHECK(set_similarity(std::vector<TokenList>{{"a"}, {"b", "c"}}, y) == 1.0);

  const std::vector<TokenList> sims = {{"a"}, {"b"}};
  const std::vector<double> uniform = {0.5, 0.5};
  CHECK(expected_similarity(std::vector<TokenList>{{"a"}}, sims, uniform) == doctest::Approx(0.5));
  CHECK(expected_similarity(sims, sims, uniform) == doctest::Approx(1.0));
  const std::vector<TokenList> single = {{"i", "am", "fine"}};
  const std::vector<TokenList> set = {{"i", "am", "good"}, {"no"}};
  CHECK(expected_similarity(set, single, std::vector<double>{1.0}) == set_similarity(set, single[0]));
}

TEST_CASE("expected similarity is monotone in the set") {
  std::mt19937_64 rng(32);
  for (int trial = 0; trial < 300; ++trial) {
    const auto inst = random_instance(rng);
    std::vector<TokenBag> set;
    for (const auto& bag : inst.candidate_bags) {
      const double before = expected_similarity(set, inst.simulated_bags, inst.probs);
      set.push_back(bag);
      const double after = expected_similarity(set, inst.simulated_bags, inst.probs);
      REQUIRE(after >= before);
    }
  }
}

TEST_CASE("K=1 picks the best expected similarity regardless of lambda") {
  const auto inst = make_instance({{"x"}, {"a", "b"}, {"a"}}, {0, 1, 2}, {{"a"}, {"a", "b"}}, {0.5, 0.5});
  for (double lambda : {0.0, 0.05, 10.0}) {
    const auto sel = greedy_select(inst.problem(), 1, lambda);
    REQUIRE(sel.positions == std::vector<std::size_t>{1});
    CHECK(sel.gains[0] == doctest::Approx(0.5 * (2.0 / 3.0) + 0.5));
  }
}

TEST_CASE("duplicate candidate loses to a new reply") {
  // Shortlist {"a", "a", "b"}, uniform q over {"a", "b"}, lambda 0.05, K 2.
  const auto inst = make_instance({{"a"}, {"a"}, {"b"}}, {0, 1, 2}, {{"a"}, {"b"}}, {0.5, 0.5});
  const auto sel = greedy_select(inst.problem(), 2, 0.05);
  CHECK(sel.positions == std::vector<std::size_t>{0, 2});
  CHECK(sel.gains[0] == doctest::Approx(0.5));
  // The duplicate would score 0.5 - 0.05; "b" scores 1.0 - 0.
  CHECK(sel.gains[1] == doctest::Approx(1.0));
  CHECK(oracle::greedy_objective({{"a"}}, {"a"}, {{"a"}, {"b"}}, {0.5, 0.5}, 0.05) ==
        doctest::Approx(0.45));
}

TEST_CASE("duplicate starvation on constructed instances") {
  // Any non-duplicate with positive marginal gain and penalty below 1 has a
  // strictly higher objective than an exact duplicate, which gains nothing.
  std::mt19937_64 rng(33);
  int checked = 0;
  for (int trial = 0; trial < 300; ++trial) {
    auto inst = random_instance(rng);
    inst.candidates.push_back(inst.candidates[0]);
    inst.candidate_ids.push_back(1000);
    inst.candidate_bags.push_back(inst.candidate_bags[0]);
    const auto sel = greedy_select(inst.problem(), 2, 0.05);
    if (sel.positions[0] != 0) continue;
    const std::vector<oracle::Tokens> chosen = {inst.candidates[0]};
    const double dup = oracle::greedy_objective(chosen, inst.candidates[0], inst.simulated, inst.probs, 0.05);
    bool better_exists = false;
    for (std::size_t i = 1; i + 1 < inst.candidates.size(); ++i) {
      const double gain = oracle::greedy_objective(chosen, inst.candidates[i], inst.simulated, inst.probs, 0.0) -
                          oracle::greedy_objective(chosen, {}, inst.simulated, inst.probs, 0.0);
      if (gain > 0 && oracle::set_f1(chosen, inst.candidates[i]) < 1.0 &&
          oracle::greedy_objective(chosen, inst.candidates[i], inst.simulated, inst.probs, 0.05) > dup)
        better_exists = true;
    }
    if (better_exists) {
      CHECK(sel.positions[1] != inst.candidates.size() - 1);
      ++checked;
    }
  }
  CHECK(checked > 20);
}

TEST_CASE("each greedy step matches a brute-force rescan") {
  std::mt19937_64 rng(34);
  const double lambdas[] = {0.0, 0.05, 0.5};
  for (int trial = 0; trial < 200; ++trial) {
    const auto inst = random_instance(rng);
    const double lambda = lambdas[synthetic::uniform(rng, 0, 2)];
    const auto sel = greedy_select(inst.problem(), 3, lambda);
    REQUIRE(sel.positions.size() == 3);
    std::vector<oracle::Tokens> chosen;
    std::vector<bool> used(inst.candidates.size(), false);
    for (std::size_t step = 0; step < 3; ++step) {
      std::size_t best = 0;
      double best_value = -1e300;
      bool found = false;
      for (std::size_t i = 0; i < inst.candidates.size(); ++i) {
        if (used[i]) continue;
        const double v = oracle::greedy_objective(chosen, inst.candidates[i], inst.simulated, inst.probs, lambda);
        if (!found || v > best_value || (v == best_value && inst.candidate_ids[i] < inst.candidate_ids[best])) {
          best = i;
          best_value = v;
          found = true;
        }
      }
      REQUIRE(sel.positions[step] == best);
      REQUIRE(std::abs(sel.gains[step] - best_value) <= 1e-9);
      used[best] = true;
      chosen.push_back(inst.candidates[best]);
    }
  }
}

TEST_CASE("greedy_select rejects too few candidates") {
  const auto inst = make_instance({{"a"}, {"b"}}, {0, 1}, {{"a"}}, {1.0});
  CHECK_THROWS_AS(greedy_select(inst.problem(), 3, 0.05), UsageError);
}

namespace {

struct Workspace {
  std::vector<DialoguePair> pairs;
  CandidatePool pool;
  HashedTfidfEncoder encoder;
  EmbeddingMatrix messages;
  EmbeddingMatrix replies;
  RetrievalIndex index;
};

Workspace make_workspace(std::size_t probes = 40, std::size_t per_cluster = 30) {
  synthetic::ClusterCorpusOptions opts;
  opts.replies_per_cluster = per_cluster;
  const auto corpus = synthetic::make_cluster_corpus(opts);
  Workspace w;
  w.pairs = corpus.pairs;
  w.pairs.resize(std::min(probes, w.pairs.size()));
  w.pool = build_candidate_pool(corpus.pairs);
  w.encoder = fit_encoder(w.pool, corpus.pairs, 128, 5);
  w.messages = encode_messages(w.encoder, w.pairs, TextSide::message);
  w.replies = encode_messages(w.encoder, w.pairs, TextSide::reply);
  w.index = RetrievalIndex(encode_pool(w.encoder, w.pool), std::vector<double>(w.pool.lm_biases().begin(), w.pool.lm_biases().end()), 0.1);
  return w;
}

PlannerConfig small_config() {
  PlannerConfig cfg;
  cfg.n_candidates = 20;
  cfg.n_simulations = 20;
  return cfg;
}

}  // namespace

TEST_CASE("offline mode with alpha 1 equals online mode") {
  const auto w = make_workspace();
  auto cfg = small_config();
  cfg.alpha = 1.0;
  const auto offline = bootstrap_dataset(w.pairs, w.messages, w.replies, w.index, w.pool, cfg, PlanMode::offline);
  const auto online = bootstrap_dataset(w.pairs, w.messages, w.replies, w.index, w.pool, cfg, PlanMode::online);
  REQUIRE(offline.size() == online.size());
  for (std::size_t i = 0; i < offline.size(); ++i)
    CHECK(bootstrap_record_json(offline[i]) == bootstrap_record_json(online[i]));
}

TEST_CASE("bootstrap keeps input order, returns K distinct pool replies, and ignores threads") {
  const auto w = make_workspace();
  const auto cfg = small_config();
  const auto one = bootstrap_dataset(w.pairs, w.messages, w.replies, w.index, w.pool, cfg, PlanMode::offline, 1);
  const auto four = bootstrap_dataset(w.pairs, w.messages, w.replies, w.index, w.pool, cfg, PlanMode::offline, 4);
  REQUIRE(one.size() == w.pairs.size());
  for (std::size_t i = 0; i < one.size(); ++i) {
    CHECK(one[i].message_id == w.pairs[i].message_id);
    CHECK(bootstrap_record_json(one[i]) == bootstrap_record_json(four[i]));
    const auto& ids = one[i].replies.reply_ids;
    REQUIRE(ids.size() == 3);
    CHECK(std::set<ReplyId>(ids.begin(), ids.end()).size() == 3);
    for (std::size_t k = 0; k < 3; ++k) {
      CHECK(ids[k] < w.pool.size());
      CHECK(one[i].replies.texts[k] == w.pool.text(ids[k]));
      CHECK(one[i].ranks[k] >= 1);
      CHECK(one[i].ranks[k] <= cfg.n_candidates);
    }
  }
}

TEST_CASE("offline shortlist contains the ground truth reply") {
  const auto w = make_workspace(60, 100);
  const PlannerConfig cfg;
  for (std::size_t i = 0; i < w.pairs.size(); ++i) {
    const auto query = augment_query(w.messages.row(i), w.replies.row(i), cfg.alpha);
    const auto shortlist = top_n(w.index, query, cfg.n_candidates, true);
    const auto truth = w.pool.find(w.pairs[i].reply);
    REQUIRE(truth.has_value());
    bool found = false;
    for (const auto& hit : shortlist)
      found = found || hit.reply_id == *truth || term_f1(w.pool.tokens(hit.reply_id), w.pool.tokens(*truth)) == 1.0;
    CHECK(found);
  }
}

TEST_CASE("record json has the documented fields") {
  BootstrapRecord rec;
  rec.message_id = 4;
  rec.message = "hi \"there\"";
  rec.replies = {{2, 7, 1}, {"a", "b", "c"}, {0.5, 0.25, 0.125}};
  rec.ranks = {1, 3, 2};
  CHECK(bootstrap_record_json(rec) ==
        R"({"gains":[0.5,0.25,0.125],"message":"hi \"there\"","message_id":4,"ranks":[1,3,2],"replies":["a","b","c"],"reply_ids":[2,7,1]})");
}
