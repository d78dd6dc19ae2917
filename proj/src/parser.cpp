#include "archattr/parser.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

#include "archattr/error.hpp"

namespace archattr {
namespace {

enum class Tok { LBrace, RBrace, Colon, String, Integer, Ident, End };

struct Token {
  Tok kind = Tok::End;
  std::string text;
  long long value = 0;
  std::size_t line = 1;
  std::size_t column = 1;
};

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) {}

  Token next() {
    skip_blank();
    Token t;
    t.line = line_;
    t.column = column_;
    if (pos_ >= text_.size()) return t;

    const char c = text_[pos_];
    if (c == '{' || c == '}' || c == ':') {
      advance();
      t.kind = c == '{' ? Tok::LBrace : c == '}' ? Tok::RBrace : Tok::Colon;
      t.text = std::string(1, c);
      return t;
    }
    if (c == '"') return string_token(t);
    if (c == '-' || is_digit(c)) return integer_token(t);
    if (is_ident_start(c)) {
      while (pos_ < text_.size() && is_ident_char(text_[pos_])) {
        t.text.push_back(text_[pos_]);
        advance();
      }
      t.kind = Tok::Ident;
      return t;
    }
    throw SyntaxError(line_, column_, std::string("unexpected character '") + c + "'");
  }

 private:
  static bool is_digit(char c) { return c >= '0' && c <= '9'; }
  static bool is_ident_start(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
  }
  static bool is_ident_char(char c) { return is_ident_start(c) || is_digit(c); }

  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      column_ = 1;
    } else {
      ++column_;
    }
    ++pos_;
  }

  void skip_blank() {
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (c == '#') {
        while (pos_ < text_.size() && text_[pos_] != '\n') advance();
      } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        advance();
      } else {
        break;
      }
    }
  }

  Token string_token(Token t) {
    advance();  // opening quote
    while (true) {
      if (pos_ >= text_.size() || text_[pos_] == '\n') {
        throw SyntaxError(t.line, t.column, "unterminated string");
      }
      char c = text_[pos_];
      if (c == '"') {
        advance();
        break;
      }
      if (c == '\\') {
        advance();
        if (pos_ >= text_.size()) throw SyntaxError(t.line, t.column, "unterminated string");
        c = text_[pos_];
        if (c != '"' && c != '\\') {
          throw SyntaxError(line_, column_, "unsupported escape sequence");
        }
      }
      t.text.push_back(c);
      advance();
    }
    t.kind = Tok::String;
    return t;
  }

  Token integer_token(Token t) {
    const std::size_t start = pos_;
    if (text_[pos_] == '-') advance();
    while (pos_ < text_.size() && is_digit(text_[pos_])) advance();
    t.text = std::string(text_.substr(start, pos_ - start));
    if (pos_ < text_.size() && (is_ident_char(text_[pos_]) || text_[pos_] == '.')) {
      throw SyntaxError(t.line, t.column, "expected an integer");
    }
    const char* first = t.text.data();
    const char* last = first + t.text.size();
    auto [ptr, ec] = std::from_chars(first, last, t.value);
    if (ec != std::errc() || ptr != last) {
      throw SyntaxError(t.line, t.column, "invalid integer '" + t.text + "'");
    }
    t.kind = Tok::Integer;
    return t;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::size_t column_ = 1;
};

// Raw field values collected for one layer block before validation.
struct RawLayer {
  std::size_t line = 0;
  std::size_t column = 0;
  std::optional<std::string> name;
  std::optional<std::string> type;
  std::optional<std::string> top;
  std::vector<Token> bottoms;
  std::map<std::string, Token> ints;
  std::vector<Token> input_dims;
  std::optional<Token> pool;
};

constexpr std::string_view kWindowFields[] = {"kernel_h", "kernel_w", "stride_h",
                                             "stride_w", "pad_h",    "pad_w"};

bool is_window_field(const std::string& key) {
  for (auto f : kWindowFields) {
    if (f == key) return true;
  }
  return false;
}

class Parser {
 public:
  explicit Parser(std::string_view text) : lexer_(text) { shift(); }

  NetworkGraph parse() {
    std::vector<RawLayer> raw;
    std::optional<std::string> population;
    while (current_.kind != Tok::End) {
      const Token key = expect(Tok::Ident, "expected 'layer' or a field name");
      if (key.text == "layer") {
        raw.push_back(parse_layer(key));
      } else if (key.text == "name" || key.text == "population") {
        expect(Tok::Colon, "expected ':'");
        const Token v = expect(Tok::String, "expected a quoted string");
        if (key.text == "population") population = v.text;
      } else {
        throw SyntaxError(key.line, key.column, "unknown top-level field '" + key.text + "'");
      }
    }
    return assemble(raw, std::move(population));
  }

 private:
  void shift() { current_ = lexer_.next(); }

  Token expect(Tok kind, const std::string& what) {
    if (current_.kind != kind) {
      throw SyntaxError(current_.line, current_.column,
                        what + (current_.kind == Tok::End
                                    ? std::string(", found end of input")
                                    : ", found '" + current_.text + "'"));
    }
    Token t = current_;
    shift();
    return t;
  }

  RawLayer parse_layer(const Token& head) {
    RawLayer layer;
    layer.line = head.line;
    layer.column = head.column;
    expect(Tok::LBrace, "expected '{' after 'layer'");
    while (current_.kind != Tok::RBrace) {
      const Token key = expect(Tok::Ident, "expected a field name or '}'");
      expect(Tok::Colon, "expected ':' after '" + key.text + "'");
      const std::string& k = key.text;
      if (k == "name" || k == "type" || k == "top" || k == "bottom") {
        const Token v = expect(Tok::String, "field '" + k + "' expects a quoted string");
        if (k == "bottom") {
          layer.bottoms.push_back(v);
        } else {
          auto& slot = k == "name" ? layer.name : k == "type" ? layer.type : layer.top;
          if (slot) throw SyntaxError(key.line, key.column, "repeated field '" + k + "'");
          slot = v.text;
        }
      } else if (is_window_field(k) || k == "num_output") {
        const Token v = expect(Tok::Integer, "field '" + k + "' expects an integer");
        if (!layer.ints.emplace(k, v).second) {
          throw SyntaxError(key.line, key.column, "repeated field '" + k + "'");
        }
      } else if (k == "input_dim") {
        layer.input_dims.push_back(expect(Tok::Integer, "field 'input_dim' expects an integer"));
      } else if (k == "pool") {
        if (current_.kind != Tok::Ident && current_.kind != Tok::String) {
          throw SyntaxError(current_.line, current_.column, "field 'pool' expects MAX or AVE");
        }
        if (layer.pool) throw SyntaxError(key.line, key.column, "repeated field 'pool'");
        layer.pool = current_;
        shift();
      } else {
        throw SyntaxError(key.line, key.column, "unknown field '" + k + "'");
      }
    }
    expect(Tok::RBrace, "expected '}'");
    return layer;
  }

  static int narrow(const Token& t) {
    if (t.value > 1'000'000 || t.value < -1'000'000) {
      throw SyntaxError(t.line, t.column, "integer out of range");
    }
    return static_cast<int>(t.value);
  }

  static LayerSpec to_spec(const RawLayer& raw) {
    const std::string where = std::to_string(raw.line) + ":" + std::to_string(raw.column);
    if (!raw.name) throw Error(ErrorCode::MissingField, where + ": layer without 'name'");
    if (!raw.type) {
      throw Error(ErrorCode::MissingField, where + ": layer '" + *raw.name + "' without 'type'");
    }
    LayerSpec spec;
    spec.name = *raw.name;
    const auto kind = parse_layer_kind(*raw.type);
    if (!kind) {
      throw Error(ErrorCode::UnknownLayerKind,
                  where + ": layer '" + spec.name + "' has unsupported type '" + *raw.type + "'");
    }
    spec.kind = *kind;

    const auto field = [&](std::string_view key) -> std::optional<int> {
      auto it = raw.ints.find(std::string(key));
      if (it == raw.ints.end()) return std::nullopt;
      return narrow(it->second);
    };
    const std::string ctx = where + ": layer '" + spec.name + "'";

    bool any_window = false;
    for (auto f : kWindowFields) any_window = any_window || raw.ints.count(std::string(f));
    if (has_window(spec.kind)) {
      Window w;
      for (auto f : {"kernel_h", "kernel_w", "stride_h", "stride_w"}) {
        if (!field(f)) throw Error(ErrorCode::MissingField, ctx + " requires field " + f);
      }
      w.kernel_h = *field("kernel_h");
      w.kernel_w = *field("kernel_w");
      w.stride_h = *field("stride_h");
      w.stride_w = *field("stride_w");
      w.pad_h = field("pad_h").value_or(0);
      w.pad_w = field("pad_w").value_or(0);
      spec.window = w;
    } else if (any_window) {
      throw Error(ErrorCode::UnexpectedField, ctx + " does not accept kernel/stride/pad fields");
    }

    spec.num_output = field("num_output");

    if (!raw.input_dims.empty()) {
      if (raw.input_dims.size() != 3) {
        throw Error(ErrorCode::MissingField,
                    ctx + " needs exactly three input_dim entries (height, width, channels)");
      }
      spec.input_shape = InputShape{narrow(raw.input_dims[0]), narrow(raw.input_dims[1]),
                                    narrow(raw.input_dims[2])};
    }

    if (raw.pool) {
      const std::string& m = raw.pool->text;
      if (m == "MAX" || m == "max") {
        spec.pool_method = PoolMethod::Max;
      } else if (m == "AVE" || m == "avg" || m == "AVG") {
        spec.pool_method = PoolMethod::Avg;
      } else {
        throw SyntaxError(raw.pool->line, raw.pool->column, "unknown pool method '" + m + "'");
      }
    }

    try {
      validate_layer(spec);
    } catch (const Error& e) {
      throw Error(e.code(), where + ": " + e.what());
    }
    return spec;
  }

  static NetworkGraph assemble(const std::vector<RawLayer>& raw,
                               std::optional<std::string> population) {
    std::vector<LayerSpec> layers;
    layers.reserve(raw.size());
    for (const RawLayer& r : raw) layers.push_back(to_spec(r));

    std::map<std::string, LayerIndex> by_name;
    for (LayerIndex i = 0; i < layers.size(); ++i) {
      if (!by_name.emplace(layers[i].name, i).second) {
        throw Error(ErrorCode::DuplicateLayerName,
                    std::to_string(raw[i].line) + ":" + std::to_string(raw[i].column) +
                        ": duplicate layer name '" + layers[i].name + "'");
      }
    }
    // A layer's output blob is its top, defaulting to its name.
    std::map<std::string, LayerIndex> by_top;
    for (LayerIndex i = 0; i < layers.size(); ++i) {
      const std::string blob = raw[i].top.value_or(layers[i].name);
      auto [it, fresh] = by_top.emplace(blob, i);
      if (!fresh && it->second != i) {
        throw Error(ErrorCode::DuplicateLayerName,
                    std::to_string(raw[i].line) + ":" + std::to_string(raw[i].column) +
                        ": top '" + blob + "' is produced by more than one layer");
      }
    }

    std::vector<Edge> edges;
    bool any_bottom = false;
    for (LayerIndex i = 0; i < layers.size(); ++i) {
      for (const Token& b : raw[i].bottoms) {
        any_bottom = true;
        std::optional<LayerIndex> producer;
        if (auto it = by_top.find(b.text); it != by_top.end()) {
          producer = it->second;
        } else if (auto jt = by_name.find(b.text); jt != by_name.end()) {
          producer = jt->second;
        }
        if (!producer) {
          throw Error(ErrorCode::DanglingReference,
                      std::to_string(b.line) + ":" + std::to_string(b.column) + ": layer '" +
                          layers[i].name + "' references unknown layer '" + b.text + "'");
        }
        edges.emplace_back(*producer, i);
      }
    }
    if (!any_bottom) {
      for (LayerIndex i = 1; i < layers.size(); ++i) edges.emplace_back(i - 1, i);
    }
    return NetworkGraph::build(std::move(layers), std::move(edges), std::move(population));
  }

  Lexer lexer_;
  Token current_;
};

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace

NetworkGraph parse_network(std::string_view text) { return Parser(text).parse(); }

NetworkGraph load_network(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  try {
    return parse_network(buffer.str());
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ":" + e.what());
  }
}

std::string serialize_network(const NetworkGraph& g) {
  std::ostringstream out;
  if (g.population_tag()) out << "population: " << quote(*g.population_tag()) << "\n";
  for (LayerIndex i = 0; i < g.size(); ++i) {
    const LayerSpec& layer = g.layer(i);
    out << "layer {\n";
    out << "  name: " << quote(layer.name) << "\n";
    out << "  type: \"" << to_string(layer.kind) << "\"\n";
    for (LayerIndex p : g.predecessors(i)) out << "  bottom: " << quote(g.layer(p).name) << "\n";
    if (layer.input_shape) {
      out << "  input_dim: " << layer.input_shape->height << "\n";
      out << "  input_dim: " << layer.input_shape->width << "\n";
      out << "  input_dim: " << layer.input_shape->channels << "\n";
    }
    if (layer.window) {
      const Window& w = *layer.window;
      out << "  kernel_h: " << w.kernel_h << "\n  kernel_w: " << w.kernel_w << "\n";
      out << "  stride_h: " << w.stride_h << "\n  stride_w: " << w.stride_w << "\n";
      out << "  pad_h: " << w.pad_h << "\n  pad_w: " << w.pad_w << "\n";
    }
    if (layer.num_output) out << "  num_output: " << *layer.num_output << "\n";
    if (layer.pool_method) {
      out << "  pool: " << (*layer.pool_method == PoolMethod::Max ? "MAX" : "AVE") << "\n";
    }
    out << "}\n";
  }
  return out.str();
}

}  // namespace archattr
