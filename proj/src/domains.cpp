#include "percept/domains.hpp"

#include <cctype>
#include <cstdio>
#include <stdexcept>

#include "json.hpp"

namespace percept {
namespace {

std::string squash(std::string_view text) {
  std::string out;
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c)))
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

std::vector<PersonaSpec> make_personas(Domain domain,
                                       const std::vector<std::string>& names,
                                       const std::string& group = "") {
  std::vector<PersonaSpec> out;
  for (const auto& name : names)
    out.push_back(PersonaSpec{name, name, domain, false, group});
  return out;
}

PersonaSpec default_persona(Domain domain) {
  return PersonaSpec{kDefaultPersonaId, "", domain, true, ""};
}

Catalogs build_builtin() {
  Catalogs catalogs;
  auto add = [&](Domain domain, std::vector<std::string> targets,
                 std::vector<PersonaSpec> personas) {
    DomainCatalog cat;
    cat.targets = std::move(targets);
    cat.personas.push_back(default_persona(domain));
    for (auto& p : personas) cat.personas.push_back(std::move(p));
    catalogs.set_domain(domain, std::move(cat));
  };

  add(Domain::Age, {"nonOld", "Old"},
      make_personas(Domain::Age, {"boy", "girl", "kid", "man", "woman", "elder"}));

  std::vector<std::string> race = {
      "African",        "African American", "Arab",
      "Asian",          "Black",            "Caucasian",
      "European",       "Hispanic",         "Jewish",
      "Latino",         "Middle Eastern",   "Native American",
      "Roma",           "South American",   "White"};
  add(Domain::RaceEthnicity, race, make_personas(Domain::RaceEthnicity, race));

  std::vector<std::string> religion = {
      "Atheist", "Buddhist", "Catholic", "Christian", "Hindu",
      "Jewish",  "Mormon",   "Muslim",   "Protestant", "Sikh"};
  add(Domain::Religion, religion, make_personas(Domain::Religion, religion));

  std::vector<PersonaSpec> ses;
  for (const auto& name :
       {"optometrist", "chemist", "dentist", "psychologist", "scientist",
        "professor", "physician", "lawyer", "judge", "physics teacher",
        "chemical engineer", "pharmacist"})
    ses.push_back(PersonaSpec{name, name, Domain::Ses, false, "highSES"});
  for (const auto& name :
       {"truck driver", "cashier", "line cook", "server", "bartender",
        "janitor", "sales clerk", "parking attendant", "farm worker",
        "taxi driver", "construction worker", "receptionist"})
    ses.push_back(PersonaSpec{name, name, Domain::Ses, false, "lowSES"});
  add(Domain::Ses, {"highSES", "lowSES"}, std::move(ses));

  std::vector<std::string> orientation = {"straight", "gay", "lesbian",
                                          "bisexual", "pansexual"};
  add(Domain::SexualOrientation, orientation,
      make_personas(Domain::SexualOrientation, orientation));
  return catalogs;
}

}  // namespace

std::string to_string(Domain domain) {
  switch (domain) {
    case Domain::Age: return "Age";
    case Domain::RaceEthnicity: return "RaceEthnicity";
    case Domain::Religion: return "Religion";
    case Domain::Ses: return "SES";
    case Domain::SexualOrientation: return "SexualOrientation";
  }
  return "?";
}

std::string to_string(ContextCondition condition) {
  return condition == ContextCondition::Ambiguous ? "ambiguous"
                                                  : "disambiguated";
}

std::string to_string(Polarity polarity) {
  return polarity == Polarity::Positive ? "positive" : "negative";
}

std::optional<Domain> parse_domain(std::string_view text) {
  std::string key = squash(text);
  if (key == "age") return Domain::Age;
  if (key == "raceethnicity" || key == "race") return Domain::RaceEthnicity;
  if (key == "religion") return Domain::Religion;
  if (key == "ses" || key == "socioeconomicstatus") return Domain::Ses;
  if (key == "sexualorientation") return Domain::SexualOrientation;
  return std::nullopt;
}

std::optional<ContextCondition> parse_condition(std::string_view text) {
  std::string key = squash(text);
  if (key == "ambig" || key == "ambiguous") return ContextCondition::Ambiguous;
  if (key == "disambig" || key == "disambiguated")
    return ContextCondition::Disambiguated;
  return std::nullopt;
}

std::optional<Polarity> parse_polarity(std::string_view text) {
  std::string key = squash(text);
  if (key == "nonneg" || key == "nonnegative" || key == "positive" ||
      key == "pos")
    return Polarity::Positive;
  if (key == "neg" || key == "negative") return Polarity::Negative;
  return std::nullopt;
}

const Catalogs& Catalogs::builtin() {
  static const Catalogs instance = build_builtin();
  return instance;
}

const DomainCatalog& Catalogs::domain(Domain domain) const {
  auto it = domains_.find(domain);
  if (it == domains_.end())
    throw std::out_of_range("no catalog for domain " + to_string(domain));
  return it->second;
}

void Catalogs::set_domain(Domain domain, DomainCatalog catalog) {
  domains_[domain] = std::move(catalog);
}

std::optional<std::string> Catalogs::canonical_target(
    Domain domain, std::string_view raw) const {
  const auto& cat = this->domain(domain);
  std::string key = squash(raw);
  auto lookup = [&](const std::string& k) -> std::optional<std::string> {
    for (const auto& t : cat.targets)
      if (squash(t) == k) return t;
    return std::nullopt;
  };
  if (auto hit = lookup(key)) return hit;
  // Source datasets gender-prefix some tags ("F-Black", "M-Latino").
  if (raw.size() > 2 && (raw[0] == 'M' || raw[0] == 'F' || raw[0] == 'm' ||
                         raw[0] == 'f') &&
      raw[1] == '-')
    return lookup(squash(raw.substr(2)));
  return std::nullopt;
}

Catalogs Catalogs::from_json_text(const std::string& json_text) {
  nlohmann::json doc = nlohmann::json::parse(json_text);
  Catalogs catalogs = builtin();
  if (!doc.contains("domains")) return catalogs;
  for (auto& [name, body] : doc.at("domains").items()) {
    auto domain = parse_domain(name);
    if (!domain)
      throw std::invalid_argument("catalog file: unknown domain '" + name + "'");
    DomainCatalog cat;
    for (const auto& t : body.at("targets"))
      cat.targets.push_back(t.get<std::string>());
    cat.personas.push_back(default_persona(*domain));
    for (const auto& p : body.at("personas")) {
      PersonaSpec spec;
      if (p.is_string()) {
        spec.id = p.get<std::string>();
        spec.display_name = spec.id;
      } else {
        spec.id = p.at("id").get<std::string>();
        spec.display_name = p.value("display_name", spec.id);
        spec.group = p.value("group", "");
      }
      spec.domain = *domain;
      if (spec.id == kDefaultPersonaId)
        throw std::invalid_argument("catalog file: 'default' is reserved");
      cat.personas.push_back(std::move(spec));
    }
    catalogs.set_domain(*domain, std::move(cat));
  }
  return catalogs;
}

Catalogs Catalogs::load_file(const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) throw std::runtime_error("cannot open catalog file: " + path);
  std::string text;
  char buf[4096];
  size_t n;
  while ((n = std::fread(buf, 1, sizeof(buf), f)) > 0) text.append(buf, n);
  std::fclose(f);
  return from_json_text(text);
}

const std::vector<PersonaSpec>& persona_catalog(Domain domain,
                                                const Catalogs& catalogs) {
  return catalogs.domain(domain).personas;
}

}  // namespace percept
