#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace percept {

enum class Domain { Age, RaceEthnicity, Religion, Ses, SexualOrientation };
enum class ContextCondition { Ambiguous, Disambiguated };
enum class Polarity { Positive, Negative };

inline constexpr std::array<Domain, 5> kAllDomains = {
    Domain::Age, Domain::RaceEthnicity, Domain::Religion, Domain::Ses,
    Domain::SexualOrientation};

std::string to_string(Domain domain);
std::string to_string(ContextCondition condition);
std::string to_string(Polarity polarity);

/// Tolerant parsers: accept the canonical names plus the source-benchmark
/// spellings ("Race_ethnicity", "ambig", "nonneg", ...).
std::optional<Domain> parse_domain(std::string_view text);
std::optional<ContextCondition> parse_condition(std::string_view text);
std::optional<Polarity> parse_polarity(std::string_view text);

struct PersonaSpec {
  std::string id;
  std::string display_name;
  Domain domain = Domain::Age;
  bool is_default = false;
  std::string group;  // optional grouping tag, e.g. SES high/low

  friend bool operator==(const PersonaSpec&, const PersonaSpec&) = default;
};

inline constexpr const char* kDefaultPersonaId = "default";

/// Identity lists for one domain. Targets drive dataset validation and metric
/// scopes; personas drive system-prompt assignment. The default persona is
/// always first.
struct DomainCatalog {
  std::vector<std::string> targets;
  std::vector<PersonaSpec> personas;
};

/// Per-domain identity catalogs. The built-in set covers the five shipped
/// domains; extended or replacement catalogs load from a JSON data file (see
/// data/catalogs.json for the schema).
class Catalogs {
 public:
  static const Catalogs& builtin();

  /// Loads a catalog file; domains absent from the file keep built-in lists.
  static Catalogs load_file(const std::string& path);
  static Catalogs from_json_text(const std::string& json_text);

  const DomainCatalog& domain(Domain domain) const;
  void set_domain(Domain domain, DomainCatalog catalog);

  /// Maps a raw target tag to its catalog spelling. Matching ignores case and
  /// punctuation and tolerates gendered tag prefixes ("M-", "F-").
  std::optional<std::string> canonical_target(Domain domain,
                                              std::string_view raw) const;

 private:
  std::map<Domain, DomainCatalog> domains_;
};

/// All personas for a domain, default persona first.
const std::vector<PersonaSpec>& persona_catalog(
    Domain domain, const Catalogs& catalogs = Catalogs::builtin());

}  // namespace percept
