#ifndef CROSSAUG_CLI_H_
#define CROSSAUG_CLI_H_

#include <map>
#include <string>
#include <vector>

#include "crossaug/corpus.h"
#include "crossaug/synthcorpus.h"
#include "crossaug/tagger.h"
#include "crossaug/trainer.h"

namespace crossaug {

// Environment variable naming the default config file.
inline constexpr const char* kConfigEnv = "CROSSAUG_CONFIG";

// Everything a command can be configured with. Keys are snake_case; the
// matching flag is --key with dashes.
struct RunConfig {
  std::string profile = "paper";
  Profile run = paper_profile();
  TaggerConfig tagger;
  SynthSpec synth = SynthSpec::defaults();
  std::string types;  // comma-separated; empty means the OntoNotes set
  std::string src_domain = "src";
  std::string tgt_domain = "tgt";
  std::map<std::string, std::string> paths;

  // Throws ConfigError on an unknown key or a malformed value.
  void set(const std::string& key, const std::string& value);
  std::string path(const std::string& key) const;  // "" when unset
  EntityTypes entity_types() const;
  // Sorted key=value lines of every setting, paths included.
  std::string dump() const;

  static const std::vector<std::string>& keys();
  static bool is_path_key(const std::string& key);
};

// Flat key=value text; '#' starts a comment line. Throws ConfigError.
std::map<std::string, std::string> parse_config_text(const std::string& text);
std::map<std::string, std::string> read_config_file(const std::string& path);

// Profile from flags, else file, else "paper"; then file values, then flags.
RunConfig resolve_config(const std::map<std::string, std::string>& file_values,
                         const std::map<std::string, std::string>& flag_values);

// Entry point of the command-line tool. Exit 0 on success, 1 on invalid
// input or configuration, 2 on usage errors.
int run_cli(int argc, char** argv);

}  // namespace crossaug

#endif  // CROSSAUG_CLI_H_
