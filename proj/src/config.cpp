#include "refvae/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace refvae {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

double parse_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || end != v.data() + v.size()) throw ConfigError("config key '" + key + "': not a number: " + v);
  return out;
}

template <typename Int>
Int parse_int(const std::string& key, const std::string& v) {
  Int out = 0;
  int base = 10;
  std::string digits = v;
  if (digits.size() > 2 && digits[0] == '0' && (digits[1] == 'x' || digits[1] == 'X')) {
    base = 16;
    digits = digits.substr(2);
  }
  auto [end, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), out, base);
  if (ec != std::errc() || end != digits.data() + digits.size()) throw ConfigError("config key '" + key + "': not an integer: " + v);
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("config key '" + key + "': not a boolean: " + v);
}

std::vector<int> parse_int_list(const std::string& key, const std::string& v) {
  std::vector<int> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(parse_int<int>(key, item));
  }
  return out;
}

std::string join(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

}  // namespace

TrainConfig TrainConfig::desk() { return {}; }

TrainConfig TrainConfig::paper() {
  TrainConfig c;
  c.preset = "paper";
  c.batch = 16;
  c.iterations = 50000;
  c.patch = 32;
  c.latent = {8, 8, 128};
  c.canonical_ref = 256;
  c.extractor = "vgg19";
  c.disc_widths = {64, 128, 256, 512};
  c.disc_strided = 3;
  c.lr_skip = false;
  c.style_target = StyleTarget::Reference;
  return c;
}

ModelConfig TrainConfig::model_config() const {
  ModelConfig m;
  m.extractor = extractor == "vgg19" ? ExtractorConfig::vgg19() : ExtractorConfig::toy();
  m.extractor.canonical_size = canonical_ref;
  m.extractor.seed = extractor_seed;
  m.latent = latent;
  m.scale = scale;
  m.decoder_widths = decoder_widths;
  m.discriminator = {disc_widths, disc_strided};
  m.use_cvae = use_cvae;
  m.lr_skip = lr_skip;
  m.init_seed = seed;
  return m;
}

void TrainConfig::validate() const {
  if (batch < 1) throw ConfigError("batch must be >= 1");
  if (iterations < 1) throw ConfigError("iterations must be >= 1");
  if (scale < 1 || (scale & (scale - 1)) != 0) throw ConfigError("scale must be a power of two");
  if (patch < 4) throw ConfigError("patch must be >= 4");
  if ((patch * scale) % kExtractorStride != 0) throw ConfigError("patch*scale must be a multiple of 8");
  if (!decoder_widths.empty() && decoder_widths.size() != 3) throw ConfigError("decoder_widths needs exactly 3 entries");
  if (noise_std < 0.0) throw ConfigError("noise_std must be >= 0");
  if (!(adam.lr > 0.0)) throw ConfigError("lr must be > 0");
  if (canonical_ref < 16 || canonical_ref % 8 != 0) throw ConfigError("canonical_ref must be a multiple of 8, >= 16");
  if (latent.height < 1 || latent.width < 1 || latent.channels < 1) throw ConfigError("latent dimensions must be >= 1");
  if (extractor != "toy" && extractor != "vgg19") throw ConfigError("extractor must be toy or vgg19");
  if (extractor == "vgg19" && extractor_weights.empty()) throw ConfigError("extractor vgg19 needs extractor_weights");
  if (disc_widths.empty() || disc_strided < 0 || disc_strided > static_cast<int>(disc_widths.size())) {
    throw ConfigError("discriminator layout invalid");
  }
  if (checkpoint_every < 0) throw ConfigError("checkpoint_every must be >= 0");
  try {
    weights.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

const std::map<std::string, std::string>& TrainConfig::documented_keys() {
  static const std::map<std::string, std::string> keys = {
      {"preset", "base values: desk | paper (default desk)"},
      {"lr", "learning rate (1e-4)"},
      {"beta1", "Adam first-moment coefficient (0.9)"},
      {"beta2", "Adam second-moment coefficient (0.999)"},
      {"adam_eps", "Adam epsilon (1e-8)"},
      {"weight_decay", "decoupled weight decay (1e-4)"},
      {"batch", "patches per iteration (desk 4, paper 16)"},
      {"iterations", "training iterations (desk 2000, paper 50000)"},
      {"scale", "upsampling factor, power of two (8)"},
      {"patch", "LR patch side; HR patch = patch*scale (desk 16, paper 32)"},
      {"noise_std", "additive Gaussian noise of the degradation (0)"},
      {"lambda_content", "content loss weight (1)"},
      {"lambda_style", "style loss weight (10)"},
      {"lambda_lpips", "perceptual loss weight (1)"},
      {"lambda_tv", "total variation weight (1)"},
      {"lambda_kl", "KL weight (1)"},
      {"lambda_adv", "adversarial weight (1); 0 disables the term"},
      {"tv_beta", "total variation exponent (1)"},
      {"style_target", "reference | hr (desk hr, paper reference)"},
      {"use_cvae", "conditional branch on/off (true)"},
      {"lr_skip", "decoder predicts an offset from the bicubic-upsampled LR (desk true, paper false)"},
      {"use_sc_loss", "style + content-feature losses on/off (true)"},
      {"use_discriminator", "adversarial training on/off (true)"},
      {"seed", "seed for initialisation and data order (1)"},
      {"latent_h", "latent grid height (8)"},
      {"latent_w", "latent grid width (8)"},
      {"latent_c", "latent channels (desk 32, paper 128)"},
      {"canonical_ref", "reference resize side (desk 64, paper 256)"},
      {"extractor", "toy | vgg19 (desk toy)"},
      {"extractor_weights", "weight container for the extractor (empty)"},
      {"extractor_seed", "seed of the bundled toy extractor (0x5eed)"},
      {"decoder_widths", "comma list of 3 widths, one per 2x decoder stage (empty: C, C/2, C/4)"},
      {"disc_widths", "discriminator widths (desk 8,16,32)"},
      {"disc_strided", "number of stride-2 discriminator layers (desk 2)"},
      {"checkpoint_every", "intermediate checkpoint cadence in iterations, 0 = final only"},
  };
  return keys;
}

void TrainConfig::set(const std::string& key, const std::string& value) {
  if (key == "preset") {
    if (value != "desk" && value != "paper") throw ConfigError("preset must be desk or paper");
    preset = value;
  } else if (key == "lr") adam.lr = parse_double(key, value);
  else if (key == "beta1") adam.beta1 = parse_double(key, value);
  else if (key == "beta2") adam.beta2 = parse_double(key, value);
  else if (key == "adam_eps") adam.eps = parse_double(key, value);
  else if (key == "weight_decay") adam.weight_decay = parse_double(key, value);
  else if (key == "batch") batch = parse_int<int>(key, value);
  else if (key == "iterations") iterations = parse_int<int>(key, value);
  else if (key == "scale") scale = parse_int<int>(key, value);
  else if (key == "patch") patch = parse_int<int>(key, value);
  else if (key == "noise_std") noise_std = parse_double(key, value);
  else if (key == "lambda_content") weights.content = parse_double(key, value);
  else if (key == "lambda_style") weights.style = parse_double(key, value);
  else if (key == "lambda_lpips") weights.lpips = parse_double(key, value);
  else if (key == "lambda_tv") weights.tv = parse_double(key, value);
  else if (key == "lambda_kl") weights.kl = parse_double(key, value);
  else if (key == "lambda_adv") weights.adversarial = parse_double(key, value);
  else if (key == "tv_beta") weights.tv_beta = parse_double(key, value);
  else if (key == "style_target") {
    if (value == "reference") style_target = StyleTarget::Reference;
    else if (value == "hr") style_target = StyleTarget::Hr;
    else throw ConfigError("style_target must be reference or hr");
  } else if (key == "use_cvae") use_cvae = parse_bool(key, value);
  else if (key == "lr_skip") lr_skip = parse_bool(key, value);
  else if (key == "use_sc_loss") use_sc_loss = parse_bool(key, value);
  else if (key == "use_discriminator") use_discriminator = parse_bool(key, value);
  else if (key == "seed") seed = parse_int<std::uint64_t>(key, value);
  else if (key == "latent_h") latent.height = parse_int<int>(key, value);
  else if (key == "latent_w") latent.width = parse_int<int>(key, value);
  else if (key == "latent_c") latent.channels = parse_int<int>(key, value);
  else if (key == "canonical_ref") canonical_ref = parse_int<int>(key, value);
  else if (key == "extractor") extractor = value;
  else if (key == "extractor_weights") extractor_weights = value;
  else if (key == "extractor_seed") extractor_seed = parse_int<std::uint64_t>(key, value);
  else if (key == "decoder_widths") decoder_widths = parse_int_list(key, value);
  else if (key == "disc_widths") disc_widths = parse_int_list(key, value);
  else if (key == "disc_strided") disc_strided = parse_int<int>(key, value);
  else if (key == "checkpoint_every") checkpoint_every = parse_int<int>(key, value);
  else throw ConfigError("unknown config key '" + key + "'");
}

std::string TrainConfig::to_text() const {
  std::map<std::string, std::string> kv = {
      {"preset", preset},
      {"lr", format_double(adam.lr)},
      {"beta1", format_double(adam.beta1)},
      {"beta2", format_double(adam.beta2)},
      {"adam_eps", format_double(adam.eps)},
      {"weight_decay", format_double(adam.weight_decay)},
      {"batch", std::to_string(batch)},
      {"iterations", std::to_string(iterations)},
      {"scale", std::to_string(scale)},
      {"patch", std::to_string(patch)},
      {"noise_std", format_double(noise_std)},
      {"lambda_content", format_double(weights.content)},
      {"lambda_style", format_double(weights.style)},
      {"lambda_lpips", format_double(weights.lpips)},
      {"lambda_tv", format_double(weights.tv)},
      {"lambda_kl", format_double(weights.kl)},
      {"lambda_adv", format_double(weights.adversarial)},
      {"tv_beta", format_double(weights.tv_beta)},
      {"style_target", style_target == StyleTarget::Reference ? "reference" : "hr"},
      {"use_cvae", use_cvae ? "true" : "false"},
      {"lr_skip", lr_skip ? "true" : "false"},
      {"use_sc_loss", use_sc_loss ? "true" : "false"},
      {"use_discriminator", use_discriminator ? "true" : "false"},
      {"seed", std::to_string(seed)},
      {"latent_h", std::to_string(latent.height)},
      {"latent_w", std::to_string(latent.width)},
      {"latent_c", std::to_string(latent.channels)},
      {"canonical_ref", std::to_string(canonical_ref)},
      {"extractor", extractor},
      {"extractor_weights", extractor_weights},
      {"extractor_seed", std::to_string(extractor_seed)},
      {"decoder_widths", join(decoder_widths)},
      {"disc_widths", join(disc_widths)},
      {"disc_strided", std::to_string(disc_strided)},
      {"checkpoint_every", std::to_string(checkpoint_every)},
  };
  std::string out;
  for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
  return out;
}

TrainConfig TrainConfig::parse(const std::string& text) {
  std::vector<std::pair<std::string, std::string>> entries;
  std::vector<std::string> unknown;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (!documented_keys().count(key)) {
      unknown.push_back(key);
      continue;
    }
    entries.emplace_back(std::move(key), std::move(value));
  }
  if (!unknown.empty()) {
    std::string msg = "unknown config keys:";
    for (const auto& k : unknown) msg += " " + k;
    throw ConfigError(msg);
  }
  TrainConfig cfg;
  for (const auto& [k, v] : entries) {
    if (k == "preset") {
      if (v == "paper") cfg = paper();
      else if (v != "desk") throw ConfigError("preset must be desk or paper");
    }
  }
  for (const auto& [k, v] : entries) cfg.set(k, v);
  cfg.validate();
  return cfg;
}

TrainConfig TrainConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

}  // namespace refvae
