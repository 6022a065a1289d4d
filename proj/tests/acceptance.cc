// Acceptance run. One PASS/FAIL line per criterion; exit status 1 if any fail.
// Pass criterion numbers as arguments to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "crossaug/augmenter.h"
#include "crossaug/cli.h"
#include "crossaug/corpus.h"
#include "crossaug/gradcheck.h"
#include "crossaug/model.h"
#include "crossaug/rng.h"
#include "crossaug/synthcorpus.h"
#include "crossaug/tagger.h"
#include "crossaug/trainer.h"

namespace fs = std::filesystem;
using namespace crossaug;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

Outcome gradients() {
  const auto t0 = Clock::now();
  double worst = 0.0;
  std::string where;
  for (const auto& c : check_primitives(1)) {
    if (c.result.max_rel_error > worst) {
      worst = c.result.max_rel_error;
      where = c.name;
    }
  }
  const auto obj = check_objective(1);
  if (obj.max_rel_error > worst) {
    worst = obj.max_rel_error;
    where = "phase1_objective";
  }
  const double t = seconds_since(t0);
  return {worst <= 1e-4 && t < 60.0,
          "max rel error " + fmt("%.2e", worst) + " (" + where + "), " + fmt("%.1fs", t)};
}

Outcome losses() {
  bool ok = loss_final(2.0, 5.0, 0.3, LossWeights{1, 0, 10}) == 5.0;
  ad::Graph g;
  const TokenBatch t = TokenBatch::pack({{2, 4, 5, 3}, {2, 6, 3}});
  const double ln = loss_noise(g.constant(Array(6, 10, -std::log(10.0))), t).item();
  ok = ok && std::fabs(ln - std::log(10.0)) <= 1e-9;

  ModelConfig c;
  c.embed_dim = c.encoder_hidden = c.decoder_hidden = c.discriminator_hidden = 3;
  c.src_vocab = c.tgt_vocab = 10;
  CrossDomainAutoencoder m(c);  // zero weights
  const auto r = evaluate_perplexity(m, {{2, 5, 6, 3}, {2, 7, 3}}, Domain::kSource,
                                     PplMode::kDenoise, NoiseConfig{}, 1, 1);
  ok = ok && std::fabs(r.perplexity() - 10.0) <= 1e-6;
  return {ok, "L_noise " + fmt("%.12f", ln) + ", ppl " + fmt("%.9f", r.perplexity())};
}

LabeledSentence random_sentence(Rng& rng, const EntityTypes& types) {
  static const std::vector<std::string> pool{"the", "a", "Jim", "York", "300", "went", ".",
                                             "New", "of",  "Paris", "lol", "@user"};
  LabeledSentence s;
  const std::size_t n = 1 + rng.below(15);
  std::string open;
  for (std::size_t i = 0; i < n; ++i) {
    s.words.push_back(pool[rng.below(pool.size())]);
    const double u = rng.uniform();
    if (!open.empty() && u < 0.3) {
      s.labels.push_back("I-" + open);
    } else if (u < 0.6) {
      open = types.names()[rng.below(types.names().size())];
      s.labels.push_back("B-" + open);
    } else {
      open.clear();
      s.labels.push_back("O");
    }
  }
  return s;
}

Outcome round_trip() {
  const auto& types = EntityTypes::ontonotes();
  Rng rng(2024);
  int failures = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto s = random_sentence(rng, types);
    try {
      if (delinearize(linearize(s)) != s) ++failures;
    } catch (const CorpusError&) {
      ++failures;
    }
  }
  return {failures == 0, std::to_string(failures) + " failures in 1000"};
}

Outcome post_processing() {
  using T = std::vector<std::string>;
  struct Case {
    T tokens;
    FilterRule want;
  };
  const std::vector<Case> suite{
      // schema
      {{"<BOS>", "I-GPE", "Paris", "<EOS>"}, FilterRule::kSchema},
      {{"<BOS>", "went", "I-PERSON", "Jim", "<EOS>"}, FilterRule::kSchema},
      {{"<BOS>", "B-PERSON", "Jim", "I-GPE", "York", "<EOS>"}, FilterRule::kSchema},
      {{"<BOS>", "B-GPE", "<EOS>"}, FilterRule::kSchema},
      {{"<BOS>", "B-GPE", "B-GPE", "Paris", "<EOS>"}, FilterRule::kSchema},
      {{"<BOS>", "B-GPE", "Paris"}, FilterRule::kSchema},
      {{"B-GPE", "Paris", "<EOS>"}, FilterRule::kSchema},
      {{"<BOS>", "B-GPE", "Paris", "<PAD>", "<EOS>"}, FilterRule::kSchema},
      {{"<BOS>", "B-GPE", "Paris", "<EOS>", "now", "<EOS>"}, FilterRule::kSchema},
      {{"<BOS>", "<UNK>", "B-ORG", "<EOS>"}, FilterRule::kSchema},
      // <UNK> or <MSK>
      {{"<BOS>", "B-GPE", "Paris", "<UNK>", "<EOS>"}, FilterRule::kSpecial},
      {{"<BOS>", "B-GPE", "<UNK>", "is", "nice", "<EOS>"}, FilterRule::kSpecial},
      {{"<BOS>", "the", "<MSK>", "B-ORG", "UN", "<EOS>"}, FilterRule::kSpecial},
      {{"<BOS>", "<MSK>", "B-PERSON", "Jim", "<EOS>"}, FilterRule::kSpecial},
      {{"<BOS>", "<UNK>", "<EOS>"}, FilterRule::kSpecial},
      {{"<BOS>", "the", "<MSK>", "<EOS>"}, FilterRule::kSpecial},
      {{"<BOS>", "B-GPE", "New", "I-GPE", "<UNK>", "<EOS>"}, FilterRule::kSpecial},
      {{"<BOS>", "<UNK>", "<MSK>", "B-DATE", "today", "<EOS>"}, FilterRule::kSpecial},
      {{"<BOS>", "B-CARDINAL", "300", "<UNK>", "<UNK>", "<EOS>"}, FilterRule::kSpecial},
      {{"<BOS>", "lol", "<MSK>", "@user", "<EOS>"}, FilterRule::kSpecial},
      // no entity
      {{"<BOS>", "the", "end", "<EOS>"}, FilterRule::kNoEntity},
      {{"<BOS>", "Paris", "is", "nice", "<EOS>"}, FilterRule::kNoEntity},
      {{"<BOS>", "lol", "<EOS>"}, FilterRule::kNoEntity},
      {{"<BOS>", "went", "home", ".", "<EOS>"}, FilterRule::kNoEntity},
      {{"<BOS>", "B-", "Paris", "<EOS>"}, FilterRule::kNoEntity},
      {{"<BOS>", "B-CITY", "Paris", "<EOS>"}, FilterRule::kNoEntity},
      {{"<BOS>", "O", "Paris", "<EOS>"}, FilterRule::kNoEntity},
      {{"<BOS>", "i", "am", "so", "tired", "<EOS>"}, FilterRule::kNoEntity},
      {{"<BOS>", "b-gpe", "Paris", "<EOS>"}, FilterRule::kNoEntity},
      {{"<BOS>", "300", "of", "the", "<EOS>"}, FilterRule::kNoEntity},
      // accept
      {{"<BOS>", "B-GPE", "Paris", "<EOS>"}, FilterRule::kAccept},
      {{"<BOS>", "B-GPE", "New", "I-GPE", "York", "wins", "<EOS>"}, FilterRule::kAccept},
      {{"<BOS>", "B-PERSON", "Jim", "bought", "B-CARDINAL", "300", "<EOS>"}, FilterRule::kAccept},
      {{"<BOS>", "lol", "B-ORG", "UN", "<EOS>"}, FilterRule::kAccept},
      {{"<BOS>", "B-GPE", "Paris", "B-GPE", "Rome", "<EOS>"}, FilterRule::kAccept},
      {{"<BOS>", "B-DATE", "today", "I-DATE", "and", "I-DATE", "tomorrow", "<EOS>"},
       FilterRule::kAccept},
      {{"<BOS>", "@user", "B-PERSON", "Jim", "I-PERSON", "Smith", ".", "<EOS>"},
       FilterRule::kAccept},
      {{"<BOS>", "B-LOC", "Alps", "<EOS>"}, FilterRule::kAccept},
      {{"<BOS>", "the", "B-EVENT", "Olympics", "were", "fun", "<EOS>"}, FilterRule::kAccept},
      {{"<BOS>", "B-WORK_OF_ART", "Hamlet", "B-PERSON", "Jim", "<EOS>"}, FilterRule::kAccept},
  };
  int correct = 0;
  std::string first_wrong;
  for (std::size_t i = 0; i < suite.size(); ++i) {
    const FilterRule got = post_process(LinearSequence{suite[i].tokens});
    if (got == suite[i].want) {
      ++correct;
    } else if (first_wrong.empty()) {
      first_wrong = ", first miss #" + std::to_string(i) + " got " + rule_name(got);
    }
  }
  return {correct == static_cast<int>(suite.size()),
          std::to_string(correct) + "/" + std::to_string(suite.size()) + " correct" + first_wrong};
}

Outcome similarity() {
  const double a = similarity_from_counts(63666, 14056).similarity_pct;
  const double b = similarity_from_counts(76347, 1375).similarity_pct;
  return {std::fabs(a - 18.08) <= 0.005 && std::fabs(b - 1.77) <= 0.005,
          fmt("%.4f%%", a) + " and " + fmt("%.4f%%", b)};
}

// Criteria 6 and 9 share the same runs.
struct OverfitRun {
  std::vector<double> best_ppl;
  std::vector<std::size_t> epochs;
  std::size_t batches = 0;
  double max_gen_norm = 0.0;
  double max_disc_norm = 0.0;
  double max_softmax_error = 0.0;
  bool finite = true;
  double seconds = 0.0;
};

const OverfitRun& overfit_runs() {
  static const OverfitRun run = [] {
    OverfitRun r;
    const auto t0 = Clock::now();
    const SynthPair fx = generate_pair(SynthSpec::fixture());
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      Profile p = desk_profile();
      p.train.seed = seed;
      p.train.phase1_epochs = 200;
      const TrainData data =
          prepare_data(fx.formal_train, fx.noisy_train, &fx.formal_train, &fx.noisy_train, p.train);
      TrainerState st = init_state(p.model, data, p.train);
      double best = INFINITY;
      std::size_t reached = 0;
      TrainHooks hooks;
      hooks.on_batch = [&](const BatchStats& b) {
        ++r.batches;
        r.max_gen_norm = std::max(r.max_gen_norm, b.generator_norm_clipped);
        r.max_disc_norm = std::max(r.max_disc_norm, b.discriminator_norm_clipped);
        r.max_softmax_error = std::max(r.max_softmax_error, b.max_softmax_row_error);
        r.finite = r.finite && std::isfinite(b.generator_norm_clipped) &&
                   std::isfinite(b.max_softmax_row_error);
      };
      hooks.on_epoch = [&](const EpochRecord& e) {
        best = std::min(best, e.dev_denoise_ppl);
        reached = e.epoch;
        return e.dev_denoise_ppl > 2.0;
      };
      try {
        train_phase1(st, data, p.train, hooks);
      } catch (const TrainingError& e) {
        std::fprintf(stderr, "seed %llu: %s\n", static_cast<unsigned long long>(seed), e.what());
        r.finite = false;
      }
      r.best_ppl.push_back(best);
      r.epochs.push_back(reached);
    }
    r.seconds = seconds_since(t0);
    return r;
  }();
  return run;
}

Outcome overfit() {
  const auto& r = overfit_runs();
  bool ok = r.seconds < 300.0 && r.best_ppl.size() == 3;
  std::string detail;
  for (std::size_t i = 0; i < r.best_ppl.size(); ++i) {
    ok = ok && r.best_ppl[i] <= 2.0;
    detail += "seed " + std::to_string(i + 1) + " ppl " + fmt("%.3f", r.best_ppl[i]) + " @" +
              std::to_string(r.epochs[i]) + ", ";
  }
  return {ok, detail + fmt("%.1fs", r.seconds)};
}

Outcome invariants() {
  const auto& r = overfit_runs();
  const bool ok = r.finite && r.batches > 0 && r.max_gen_norm <= 5.0 + 1e-9 &&
                  r.max_disc_norm <= 5.0 + 1e-9 && r.max_softmax_error <= 1e-9;
  return {ok, std::to_string(r.batches) + " batches, max clipped norms " +
                  fmt("%.6f", r.max_gen_norm) + "/" + fmt("%.6f", r.max_disc_norm) +
                  ", max softmax row error " + fmt("%.1e", r.max_softmax_error)};
}

Outcome transfer() {
  const auto t0 = Clock::now();
  const SynthPair pair = generate_pair(SynthSpec::defaults());
  double acc_sum = 0.0, gain_sum = 0.0;
  std::string detail;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    Profile p = desk_profile();
    p.train.seed = seed;
    const TrainData data = prepare_data(pair.formal_train, pair.noisy_train, &pair.formal_dev,
                                        &pair.noisy_dev, p.train);
    TrainerState st = init_state(p.model, data, p.train);
    train_phase1(st, data, p.train);
    train_phase2(st, data, p.train);

    // formal test sentences against their styled rewrites
    std::vector<std::vector<int>> ids;
    std::vector<LinearSequence> refs;
    for (const auto& s : pair.formal_test.sentences) {
      ids.push_back(data.src_vocab.encode(linearize(s)));
      refs.push_back(linearize(pair.style.apply(s)));
    }
    std::vector<LinearSequence> hyps;
    for (const auto& o : transform(st.best, ids, Domain::kSource, p.train.batch_size)) {
      hyps.push_back(LinearSequence{data.tgt_vocab.decode(o)});
    }
    const double acc = token_accuracy(hyps, refs).value();

    const auto rep = augment(st.best, data.src_vocab, data.tgt_vocab, pair.formal_train,
                             Domain::kSource, pair.types, p.train.batch_size);
    TaggerConfig tc;
    tc.seed = seed;
    const auto ex = run_experiment(pair.formal_train, pair.noisy_train, rep.generated,
                                   pair.noisy_dev, pair.noisy_test, tc, pair.types);
    acc_sum += acc;
    gain_sum += ex.gain();
    detail += "seed " + std::to_string(seed) + " acc " + fmt("%.3f", acc) + " gain " +
              fmt("%.2f", ex.gain()) + ", ";
  }
  const double t = seconds_since(t0);
  const double acc = acc_sum / 3, gain = gain_sum / 3;
  return {acc >= 0.60 && gain >= 2.0 && t < 900.0,
          detail + "mean acc " + fmt("%.3f", acc) + " mean gain " + fmt("%.2f", gain) + ", " +
              fmt("%.1fs", t)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

Outcome determinism() {
  const auto t0 = Clock::now();
  const fs::path dir = fs::temp_directory_path() / ("crossaug_accept_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  const SynthPair fx = generate_pair(SynthSpec::fixture());
  write_conll(fx.formal_train, (dir / "src.conll").string());
  write_conll(fx.noisy_train, (dir / "tgt.conll").string());

  auto train = [&](const std::string& out) {
    std::vector<std::string> args{"crossaug",    "train",
                                  "--profile",   "desk",
                                  "--seed",      "7",
                                  "--src-train", (dir / "src.conll").string(),
                                  "--tgt-train", (dir / "tgt.conll").string(),
                                  "--out",       (dir / out).string()};
    std::vector<char*> argv;
    for (auto& a : args) argv.push_back(a.data());
    return run_cli(static_cast<int>(argv.size()), argv.data());
  };
  std::ostringstream quiet;  // training chatter goes to std::cerr
  std::streambuf* saved = std::cerr.rdbuf(quiet.rdbuf());
  const int rc_a = train("a"), rc_b = train("b");
  std::cerr.rdbuf(saved);
  const std::string ck_a = slurp(dir / "a/model.ckpt"), ck_b = slurp(dir / "b/model.ckpt");
  const std::string log_a = slurp(dir / "a/train.log"), log_b = slurp(dir / "b/train.log");
  const bool ok = rc_a == 0 && rc_b == 0 && !ck_a.empty() && ck_a == ck_b &&
                  std::count(log_a.begin(), log_a.end(), '\n') > 1 && log_a == log_b;
  fs::remove_all(dir);
  return {ok, "exit " + std::to_string(rc_a) + "/" + std::to_string(rc_b) + ", checkpoint " +
                  std::to_string(ck_a.size()) + " bytes " + (ck_a == ck_b ? "identical" : "differs") +
                  ", log " + (log_a == log_b ? "identical" : "differs") + ", " +
                  fmt("%.1fs", seconds_since(t0))};
}

}  // namespace

int main(int argc, char** argv) {
  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> all{
      {1, "gradient check", gradients},   {2, "loss arithmetic", losses},
      {3, "round trip", round_trip},      {4, "post-processing", post_processing},
      {5, "domain similarity", similarity}, {6, "overfit sanity", overfit},
      {7, "synthetic transfer", transfer}, {8, "determinism", determinism},
      {9, "clip and softmax invariants", invariants},
  };
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));

  int failed = 0;
  for (const auto& c : all) {
    if (!wanted.empty() && !wanted.count(c.id)) continue;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s %d %s: %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str());
    std::fflush(stdout);
  }
  return failed ? 1 : 0;
}
