#include "crossaug/cli.h"

#include <CLI11.hpp>

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>

#include "crossaug/augmenter.h"
#include "crossaug/checkpoint.h"
#include "crossaug/gradcheck.h"

namespace crossaug {
namespace {

namespace fs = std::filesystem;

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  std::uint64_t x = 0;
  auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || end != v.data() + v.size()) {
    throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
  }
  return x;
}

double parse_double(const std::string& key, const std::string& v) {
  double x = 0;
  auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || end != v.data() + v.size()) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
  return x;
}

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

struct Key {
  const char* name;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define CA_SIZE(NAME, FIELD)                                                              \
  Key {                                                                                   \
    NAME, [](RunConfig& c, const std::string& v) { c.FIELD = parse_u64(NAME, v); },       \
        [](const RunConfig& c) { return std::to_string(c.FIELD); }                        \
  }
#define CA_REAL(NAME, FIELD)                                                              \
  Key {                                                                                   \
    NAME, [](RunConfig& c, const std::string& v) { c.FIELD = parse_double(NAME, v); },    \
        [](const RunConfig& c) { return fmt(c.FIELD); }                                   \
  }
#define CA_TEXT(NAME, FIELD)                                                              \
  Key {                                                                                   \
    NAME, [](RunConfig& c, const std::string& v) { c.FIELD = v; },                        \
        [](const RunConfig& c) { return c.FIELD; }                                        \
  }

const std::vector<const char*>& path_keys() {
  static const std::vector<const char*> k{"src_train", "tgt_train", "src_dev", "tgt_dev",
                                          "train",     "dev",       "test",    "gen",
                                          "input",     "output",    "model",   "out"};
  return k;
}

const std::vector<Key>& key_table() {
  static const std::vector<Key> table = [] {
    std::vector<Key> t{
        CA_TEXT("profile", profile),
        Key{"seed",
            [](RunConfig& c, const std::string& v) {
              c.run.train.seed = parse_u64("seed", v);
              c.tagger.seed = c.run.train.seed;
              c.synth.seed = c.run.train.seed;
            },
            [](const RunConfig& c) { return std::to_string(c.run.train.seed); }},
        CA_TEXT("types", types),
        CA_TEXT("src_domain", src_domain),
        CA_TEXT("tgt_domain", tgt_domain),
        // noise
        CA_REAL("p_drop", run.train.noise.p_drop),
        CA_REAL("p_mask", run.train.noise.p_mask),
        CA_REAL("p_shuffle", run.train.noise.p_shuffle),
        CA_SIZE("shuffle_window", run.train.noise.shuffle_window),
        CA_SIZE("noise_seed", run.train.noise.seed),
        // model
        CA_SIZE("embed_dim", run.model.embed_dim),
        CA_SIZE("encoder_hidden", run.model.encoder_hidden),
        CA_SIZE("decoder_hidden", run.model.decoder_hidden),
        CA_SIZE("discriminator_hidden", run.model.discriminator_hidden),
        CA_REAL("dropout", run.model.dropout_rate),
        // training
        CA_SIZE("batch_size", run.train.batch_size),
        CA_SIZE("phase1_epochs", run.train.phase1_epochs),
        CA_SIZE("phase2_epochs", run.train.phase2_epochs),
        CA_REAL("generator_lr", run.train.generator_lr),
        CA_REAL("discriminator_lr", run.train.discriminator_lr),
        CA_REAL("grad_clip", run.train.grad_clip),
        CA_REAL("phase1_lambda1", run.train.phase1_weights.noise),
        CA_REAL("phase1_lambda2", run.train.phase1_weights.trans),
        CA_REAL("phase1_lambda3", run.train.phase1_weights.adv),
        CA_REAL("phase2_lambda1", run.train.phase2_weights.noise),
        CA_REAL("phase2_lambda2", run.train.phase2_weights.trans),
        CA_REAL("phase2_lambda3", run.train.phase2_weights.adv),
        CA_SIZE("max_vocab", run.train.max_vocab),
        CA_REAL("dev_fraction", run.train.dev_fraction),
        // tagger
        CA_SIZE("tagger_embed_dim", tagger.embed_dim),
        CA_SIZE("tagger_hidden_dim", tagger.hidden_dim),
        CA_REAL("tagger_dropout", tagger.dropout),
        CA_SIZE("tagger_epochs", tagger.epochs),
        CA_SIZE("tagger_batch_size", tagger.batch_size),
        CA_REAL("tagger_lr", tagger.lr),
        CA_REAL("tagger_grad_clip", tagger.grad_clip),
        CA_REAL("tagger_unk_replace", tagger.unk_replace),
        // synthetic corpus
        CA_SIZE("synth_train_size", synth.train_size),
        CA_SIZE("synth_dev_size", synth.dev_size),
        CA_SIZE("synth_test_size", synth.test_size),
        CA_REAL("synth_style_rate", synth.style_rate),
        CA_REAL("synth_novel_share", synth.novel_share),
        CA_REAL("synth_novel_rate", synth.novel_rate),
    };
    for (const char* p : path_keys()) {
      t.push_back(Key{p, [p](RunConfig& c, const std::string& v) { c.paths[p] = v; },
                      [p](const RunConfig& c) { return c.path(p); }});
    }
    return t;
  }();
  return table;
}

#undef CA_SIZE
#undef CA_REAL
#undef CA_TEXT

const Key* find_key(const std::string& name) {
  for (const auto& k : key_table()) {
    if (name == k.name) return &k;
  }
  return nullptr;
}

std::string dashed(std::string key) {
  for (auto& c : key) {
    if (c == '_') c = '-';
  }
  return key;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

Domain parse_domain(const std::string& v) {
  if (v == "src" || v == "source") return Domain::kSource;
  if (v == "tgt" || v == "target") return Domain::kTarget;
  throw ConfigError("domain must be src or tgt, got '" + v + "'");
}

// ---- commands ---------------------------------------------------------------

std::string need(const RunConfig& c, const std::string& key) {
  const std::string p = c.path(key);
  if (p.empty()) throw ConfigError("--" + dashed(key) + " is required");
  return p;
}

std::string need_existing(const RunConfig& c, const std::string& key) {
  const std::string p = need(c, key);
  if (!fs::exists(p)) throw ConfigError("--" + dashed(key) + ": no such file '" + p + "'");
  return p;
}

std::optional<Corpus> optional_corpus(const RunConfig& c, const std::string& key,
                                      const std::string& domain) {
  if (c.path(key).empty()) return std::nullopt;
  return read_conll(need_existing(c, key), c.entity_types(), domain);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path);
  out << text;
}

struct ModelDir {
  CrossDomainAutoencoder model;
  Vocabulary src_vocab;
  Vocabulary tgt_vocab;
};

std::string model_file(const std::string& dir) { return (fs::path(dir) / "model.ckpt").string(); }

ModelDir load_model_dir(const std::string& dir) {
  if (!fs::is_directory(dir)) throw ConfigError("--model: no such directory '" + dir + "'");
  ModelDir m;
  m.model = CrossDomainAutoencoder::load(model_file(dir));
  m.src_vocab = Vocabulary::load((fs::path(dir) / "src.vocab").string());
  m.tgt_vocab = Vocabulary::load((fs::path(dir) / "tgt.vocab").string());
  return m;
}

int cmd_synth(const RunConfig& c) {
  const fs::path out = need(c, "out");
  c.synth.validate();
  fs::create_directories(out);
  const SynthPair pair = generate_pair(c.synth);
  write_conll(pair.formal_train, (out / "formal_train.conll").string());
  write_conll(pair.formal_dev, (out / "formal_dev.conll").string());
  write_conll(pair.formal_test, (out / "formal_test.conll").string());
  write_conll(pair.noisy_train, (out / "noisy_train.conll").string());
  write_conll(pair.noisy_dev, (out / "noisy_dev.conll").string());
  write_conll(pair.noisy_test, (out / "noisy_test.conll").string());
  pair.style.save((out / "style.tsv").string());
  std::string types;
  for (const auto& t : pair.types.names()) types += (types.empty() ? "" : ",") + t;
  write_text((out / "types.txt").string(), types + "\n");
  std::cerr << "wrote synthetic pair to " << out.string() << " (types " << types << ")\n";
  return 0;
}

int cmd_vocab(const RunConfig& c) {
  const Corpus corpus = read_conll(need_existing(c, "input"), c.entity_types(), c.src_domain);
  const Vocabulary v = build_vocab(corpus, c.run.train.max_vocab);
  v.save(need(c, "output"));
  std::cout << "vocabulary size\t" << v.size() << '\n';
  return 0;
}

int cmd_train(const RunConfig& c) {
  const EntityTypes types = c.entity_types();
  const Corpus src = read_conll(need_existing(c, "src_train"), types, c.src_domain);
  const Corpus tgt = read_conll(need_existing(c, "tgt_train"), types, c.tgt_domain);
  const auto src_dev = optional_corpus(c, "src_dev", c.src_domain);
  const auto tgt_dev = optional_corpus(c, "tgt_dev", c.tgt_domain);
  if (src_dev.has_value() != tgt_dev.has_value()) {
    throw ConfigError("give both --src-dev and --tgt-dev or neither");
  }
  const fs::path out = need(c, "out");
  c.run.train.validate();
  const TrainData data = prepare_data(src, tgt, src_dev ? &*src_dev : nullptr,
                                      tgt_dev ? &*tgt_dev : nullptr, c.run.train);
  ModelConfig sized = c.run.model;
  sized.src_vocab = data.src_vocab.size();
  sized.tgt_vocab = data.tgt_vocab.size();
  sized.validate();
  TrainerState state = init_state(c.run.model, data, c.run.train);
  std::cerr << log_header() << '\n';
  TrainHooks hooks;
  hooks.on_epoch = [](const EpochRecord& r) {
    std::cerr << log_line(r) << std::endl;
    return true;
  };
  train_phase1(state, data, c.run.train, hooks);
  if (c.run.train.phase2_epochs > 0) train_phase2(state, data, c.run.train, hooks);

  fs::create_directories(out);
  state.best.save(model_file(out.string()));
  data.src_vocab.save((out / "src.vocab").string());
  data.tgt_vocab.save((out / "tgt.vocab").string());
  std::string log = log_header() + "\n";
  for (const auto& r : state.log) log += log_line(r) + "\n";
  write_text((out / "train.log").string(), log);
  write_text((out / "run.config").string(), c.dump());
  std::cerr << "best phase-" << state.phase << " epoch " << state.best_epoch << ", criterion "
            << state.best_criterion << "; saved to " << out.string() << '\n';
  return 0;
}

int cmd_ppl(const RunConfig& c, const std::string& domain_flag, const std::string& mode_flag) {
  ModelDir m = load_model_dir(need(c, "model"));
  const Domain d = parse_domain(domain_flag);
  PplMode mode;
  if (mode_flag == "denoise") {
    mode = PplMode::kDenoise;
  } else if (mode_flag == "detransform") {
    mode = PplMode::kDetransform;
  } else {
    throw ConfigError("--mode must be denoise or detransform");
  }
  const Corpus corpus = read_conll(need_existing(c, "input"), c.entity_types(),
                                   d == Domain::kSource ? c.src_domain : c.tgt_domain);
  const Vocabulary& vocab = d == Domain::kSource ? m.src_vocab : m.tgt_vocab;
  std::vector<std::vector<int>> ids;
  for (const auto& s : corpus.sentences) ids.push_back(vocab.encode(linearize(s)));
  CrossDomainAutoencoder* transformer = mode == PplMode::kDetransform ? &m.model : nullptr;
  const auto r = evaluate_perplexity(m.model, ids, d, mode, c.run.train.noise,
                                     derive_seed(c.run.train.seed, 0xE7A1),
                                     c.run.train.batch_size, transformer);
  std::printf("perplexity\t%.6f\ntokens\t%zu\n", r.perplexity(), r.tokens);
  return 0;
}

int cmd_augment(const RunConfig& c, const std::string& direction) {
  Domain from;
  if (direction == "src2tgt") {
    from = Domain::kSource;
  } else if (direction == "tgt2src") {
    from = Domain::kTarget;
  } else {
    throw ConfigError("--direction must be src2tgt or tgt2src");
  }
  ModelDir m = load_model_dir(need(c, "model"));
  const EntityTypes types = c.entity_types();
  const Corpus input = read_conll(need_existing(c, "input"), types,
                                  from == Domain::kSource ? c.src_domain : c.tgt_domain);
  const std::string output = need(c, "output");
  AugmentationReport rep = augment(m.model, m.src_vocab, m.tgt_vocab, input, from, types,
                                   c.run.train.batch_size);
  if (!rep.generated.empty()) {
    try {
      rep.similarity = domain_similarity(input, rep.generated);
    } catch (const CorpusError&) {
      // input without entity mentions: nothing to compare
    }
  }
  write_conll(rep.generated, output);
  rep.save_summary(output + ".report");
  std::cout << rep.summary();
  return 0;
}

int cmd_similarity(const RunConfig& c) {
  const EntityTypes types = c.entity_types();
  const Corpus train = read_conll(need_existing(c, "train"), types, c.src_domain);
  const Corpus test = read_conll(need_existing(c, "test"), types, c.tgt_domain);
  const auto r = domain_similarity(train, test);
  std::printf("non_overlap\t%zu\noverlap\t%zu\nsimilarity_pct\t%.2f\n", r.non_overlap_count,
              r.overlap_count, r.similarity_pct);
  return 0;
}

int cmd_ner_train(const RunConfig& c) {
  const EntityTypes types = c.entity_types();
  const Corpus train = read_conll(need_existing(c, "train"), types, c.tgt_domain);
  const auto dev = optional_corpus(c, "dev", c.tgt_domain);
  const std::string out = need(c, "out");
  c.tagger.validate();
  const Tagger t = train_tagger(train, c.tagger, types, dev ? &*dev : nullptr);
  if (const auto parent = fs::path(out).parent_path(); !parent.empty()) {
    fs::create_directories(parent);
  }
  t.save(out);
  if (dev) {
    const F1Report r = micro_f1(*dev, t.tag_corpus(*dev));
    std::printf("dev_f1\t%.2f\n", 100.0 * r.f1);
  }
  return 0;
}

int cmd_ner_eval(const RunConfig& c) {
  const Tagger t = Tagger::load(need_existing(c, "model"), c.tagger);
  const Corpus test = read_conll(need_existing(c, "test"), c.entity_types(), c.tgt_domain);
  const Corpus pred = t.tag_corpus(test);
  const F1Report r = micro_f1(test, pred);
  if (!c.path("output").empty()) write_conll(pred, c.path("output"));
  std::printf("precision\t%.2f\nrecall\t%.2f\nf1\t%.2f\n", 100.0 * r.precision, 100.0 * r.recall,
              100.0 * r.f1);
  return 0;
}

int cmd_experiment(const RunConfig& c) {
  const EntityTypes types = c.entity_types();
  const Corpus src = read_conll(need_existing(c, "src_train"), types, c.src_domain);
  const Corpus tgt = read_conll(need_existing(c, "tgt_train"), types, c.tgt_domain);
  // augment writes an empty file when every candidate was filtered out
  const std::string gen_path = need_existing(c, "gen");
  const Corpus gen = fs::file_size(gen_path) == 0
                         ? Corpus{c.tgt_domain + "-gen", {}}
                         : read_conll(gen_path, types, c.tgt_domain + "-gen");
  const Corpus dev = read_conll(need_existing(c, "tgt_dev"), types, c.tgt_domain);
  const Corpus test = read_conll(need_existing(c, "test"), types, c.tgt_domain);
  c.tagger.validate();
  const ExperimentResult r = run_experiment(src, tgt, gen, dev, test, c.tagger, types);
  if (!c.path("output").empty()) write_text(c.path("output"), r.table());
  std::cout << r.table();
  return 0;
}

int cmd_gradcheck(const RunConfig& c) {
  double worst = 0.0;
  for (const auto& p : check_primitives(c.run.train.seed)) {
    std::printf("%s\t%.3g\n", p.name.c_str(), p.result.max_rel_error);
    worst = std::max(worst, p.result.max_rel_error);
  }
  const auto obj = check_objective(c.run.train.seed);
  std::printf("phase1_objective\t%.3g\t(%zu coordinates, worst %s[%zu])\n", obj.max_rel_error,
              obj.coordinates, obj.worst_parameter.c_str(), obj.worst_index);
  worst = std::max(worst, obj.max_rel_error);
  std::printf("max_relative_error\t%.3g\n", worst);
  return worst <= 1e-4 ? 0 : 1;
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
  const Key* k = find_key(key);
  if (!k) throw ConfigError("unknown config key '" + key + "'");
  if (key == "profile") profile_by_name(value);  // validates the name
  k->set(*this, value);
}

std::string RunConfig::path(const std::string& key) const {
  auto it = paths.find(key);
  return it == paths.end() ? "" : it->second;
}

EntityTypes RunConfig::entity_types() const {
  if (types.empty()) return EntityTypes::ontonotes();
  std::vector<std::string> names;
  std::stringstream ss(types);
  std::string t;
  while (std::getline(ss, t, ',')) {
    t = trim(t);
    if (!t.empty()) names.push_back(t);
  }
  return EntityTypes(names);
}

std::string RunConfig::dump() const {
  std::map<std::string, std::string> sorted;
  for (const auto& k : key_table()) sorted[k.name] = k.get(*this);
  std::string out;
  for (const auto& [k, v] : sorted) out += k + "=" + v + "\n";
  return out;
}

const std::vector<std::string>& RunConfig::keys() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& k : key_table()) n.emplace_back(k.name);
    return n;
  }();
  return names;
}

bool RunConfig::is_path_key(const std::string& key) {
  for (const char* p : path_keys()) {
    if (key == p) return true;
  }
  return false;
}

std::map<std::string, std::string> parse_config_text(const std::string& text) {
  std::map<std::string, std::string> out;
  std::stringstream in(text);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(n) + ": expected key=value");
    }
    const std::string key = trim(line.substr(0, eq));
    if (!find_key(key)) {
      throw ConfigError("config line " + std::to_string(n) + ": unknown key '" + key + "'");
    }
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

std::map<std::string, std::string> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

RunConfig resolve_config(const std::map<std::string, std::string>& file_values,
                         const std::map<std::string, std::string>& flag_values) {
  RunConfig c;
  std::string profile = "paper";
  if (auto it = file_values.find("profile"); it != file_values.end()) profile = it->second;
  if (auto it = flag_values.find("profile"); it != flag_values.end()) profile = it->second;
  c.run = profile_by_name(profile);
  c.profile = profile;
  c.tagger.seed = c.run.train.seed;
  c.synth.seed = c.run.train.seed;
  // seed first so later per-module keys are not overwritten by it
  for (const auto* values : {&file_values, &flag_values}) {
    if (auto it = values->find("seed"); it != values->end()) c.set("seed", it->second);
  }
  for (const auto* values : {&file_values, &flag_values}) {
    for (const auto& [k, v] : *values) {
      if (k != "profile" && k != "seed") c.set(k, v);
    }
  }
  c.profile = profile;
  return c;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Cross-domain autoencoder for NER data augmentation"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path,
                 std::string("key=value config file (default: $") + kConfigEnv + ")");

  struct Command {
    const char* name;
    const char* help;
  };
  const std::vector<Command> commands{
      {"synth", "write a synthetic formal/noisy corpus pair"},
      {"vocab", "build a vocabulary from a corpus"},
      {"train", "train the cross-domain autoencoder"},
      {"ppl", "perplexity of a trained model on a corpus"},
      {"augment", "generate and filter synthetic sentences"},
      {"similarity", "entity overlap between two corpora"},
      {"ner-train", "train the NER tagger"},
      {"ner-eval", "micro F1 of a tagger on a corpus"},
      {"experiment", "Source / Source+Gen / Target tagger comparison"},
      {"gradcheck", "finite-difference gradient check"},
  };
  // Every config key is also a flag of every command.
  std::map<std::string, std::map<std::string, std::string>> flag_store;
  std::map<std::string, CLI::App*> subs;
  std::string domain = "tgt", mode = "denoise", direction = "src2tgt";
  for (const auto& cmd : commands) {
    CLI::App* sub = app.add_subcommand(cmd.name, cmd.help);
    subs[cmd.name] = sub;
    auto& store = flag_store[cmd.name];
    for (const auto& key : RunConfig::keys()) {
      sub->add_option("--" + dashed(key), store[key]);
    }
    sub->add_option("--config", config_path, "key=value config file");
  }
  subs["ppl"]->add_option("--domain", domain, "src or tgt")->capture_default_str();
  subs["ppl"]->add_option("--mode", mode, "denoise or detransform")->capture_default_str();
  subs["augment"]->add_option("--direction", direction, "src2tgt or tgt2src")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  std::string name;
  for (const auto& [n, sub] : subs) {
    if (sub->parsed()) name = n;
  }
  try {
    std::map<std::string, std::string> flags;
    for (const auto& key : RunConfig::keys()) {
      if (subs[name]->get_option("--" + dashed(key))->count() > 0) {
        flags[key] = flag_store[name][key];
      }
    }
    if (config_path.empty()) {
      if (const char* env = std::getenv(kConfigEnv)) config_path = env;
    }
    const auto file = config_path.empty() ? std::map<std::string, std::string>{}
                                          : read_config_file(config_path);
    const RunConfig c = resolve_config(file, flags);

    if (name == "synth") return cmd_synth(c);
    if (name == "vocab") return cmd_vocab(c);
    if (name == "train") return cmd_train(c);
    if (name == "ppl") return cmd_ppl(c, domain, mode);
    if (name == "augment") return cmd_augment(c, direction);
    if (name == "similarity") return cmd_similarity(c);
    if (name == "ner-train") return cmd_ner_train(c);
    if (name == "ner-eval") return cmd_ner_eval(c);
    if (name == "experiment") return cmd_experiment(c);
    if (name == "gradcheck") return cmd_gradcheck(c);
    std::cerr << "error: no command\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace crossaug
