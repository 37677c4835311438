#include "npe/bvh.hpp"

#include "npe/error.hpp"

#include <Eigen/Geometry>

#include <charconv>
#include <cmath>
#include <sstream>

namespace npe {

std::string_view to_string(BvhChannel channel) {
  switch (channel) {
    case BvhChannel::Xposition: return "Xposition";
    case BvhChannel::Yposition: return "Yposition";
    case BvhChannel::Zposition: return "Zposition";
    case BvhChannel::Xrotation: return "Xrotation";
    case BvhChannel::Yrotation: return "Yrotation";
    case BvhChannel::Zrotation: return "Zrotation";
  }
  return "?";
}

std::optional<std::size_t> BvhClip::find_joint(std::string_view name) const {
  for (std::size_t i = 0; i < joints.size(); ++i) {
    if (joints[i].name == name) return i;
  }
  return std::nullopt;
}

namespace {

struct Token {
  std::string_view text;
  int line = 0;
  int column = 0;
};

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v'; }

class Scanner {
 public:
  explicit Scanner(std::string_view src) : src_(src) {}

  std::optional<Token> next() {
    skip_space();
    if (pos_ >= src_.size()) return std::nullopt;
    Token tok{{}, line_, column_};
    std::size_t start = pos_;
    while (pos_ < src_.size() && !is_space(src_[pos_])) advance();
    tok.text = src_.substr(start, pos_ - start);
    return tok;
  }

  Token expect_any(std::string_view what) {
    auto tok = next();
    if (!tok) {
      throw ParseError(ErrorCode::MalformedSyntax, "unexpected end of input, expected " + std::string(what),
                       line_, column_);
    }
    return *tok;
  }

  Token expect(std::string_view keyword) {
    Token tok = expect_any("'" + std::string(keyword) + "'");
    if (tok.text != keyword) {
      throw ParseError(ErrorCode::MalformedSyntax,
                       "expected '" + std::string(keyword) + "', found '" + std::string(tok.text) + "'",
                       tok.line, tok.column);
    }
    return tok;
  }

  // Rest of the current line, not including the terminator; advances past it.
  std::optional<Token> next_line() {
    if (pos_ >= src_.size()) return std::nullopt;
    Token tok{{}, line_, column_};
    std::size_t start = pos_;
    while (pos_ < src_.size() && src_[pos_] != '\n') advance();
    tok.text = src_.substr(start, pos_ - start);
    if (pos_ < src_.size()) advance();
    return tok;
  }

  void skip_rest_of_line() {
    while (pos_ < src_.size() && src_[pos_] != '\n') advance();
    if (pos_ < src_.size()) advance();
  }

 private:
  void skip_space() {
    while (pos_ < src_.size() && is_space(src_[pos_])) advance();
  }
  void advance() {
    if (src_[pos_] == '\n') {
      ++line_;
      column_ = 1;
    } else {
      ++column_;
    }
    ++pos_;
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int column_ = 1;
};

double parse_number(const Token& tok) {
  double value = 0.0;
  const char* first = tok.text.data();
  const char* last = first + tok.text.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last || !std::isfinite(value)) {
    throw ParseError(ErrorCode::MalformedSyntax, "invalid number '" + std::string(tok.text) + "'", tok.line,
                     tok.column);
  }
  return value;
}

std::size_t parse_count(const Token& tok) {
  std::size_t value = 0;
  auto [ptr, ec] = std::from_chars(tok.text.data(), tok.text.data() + tok.text.size(), value);
  if (ec != std::errc{} || ptr != tok.text.data() + tok.text.size()) {
    throw ParseError(ErrorCode::MalformedSyntax, "invalid count '" + std::string(tok.text) + "'", tok.line,
                     tok.column);
  }
  return value;
}

BvhChannel parse_channel(const Token& tok) {
  static constexpr std::pair<std::string_view, BvhChannel> kNames[] = {
      {"Xposition", BvhChannel::Xposition}, {"Yposition", BvhChannel::Yposition},
      {"Zposition", BvhChannel::Zposition}, {"Xrotation", BvhChannel::Xrotation},
      {"Yrotation", BvhChannel::Yrotation}, {"Zrotation", BvhChannel::Zrotation},
  };
  for (const auto& [name, channel] : kNames) {
    if (tok.text == name) return channel;
  }
  throw ParseError(ErrorCode::UnknownChannel, "unknown channel '" + std::string(tok.text) + "'", tok.line,
                   tok.column);
}

class HierarchyParser {
 public:
  explicit HierarchyParser(Scanner& scanner) : in_(scanner) {}

  std::vector<BvhJoint> parse() {
    in_.expect("HIERARCHY");
    in_.expect("ROOT");
    parse_joint_body(std::nullopt, false);
    return std::move(joints_);
  }

  std::size_t channel_total() const { return columns_; }

 private:
  void parse_joint_body(std::optional<std::size_t> parent, bool end_site) {
    BvhJoint joint;
    joint.parent = parent;
    joint.end_site = end_site;
    if (end_site) {
      in_.expect("Site");
      joint.name = joints_[*parent].name + "_End";
    } else {
      joint.name = std::string(in_.expect_any("joint name").text);
    }
    in_.expect("{");
    in_.expect("OFFSET");
    for (int axis = 0; axis < 3; ++axis) joint.offset[axis] = parse_number(in_.expect_any("offset value"));

    const std::size_t index = joints_.size();
    joints_.push_back(joint);

    Token tok = in_.expect_any("CHANNELS, JOINT, End or '}'");
    if (tok.text == "CHANNELS") {
      if (end_site) {
        throw ParseError(ErrorCode::MalformedSyntax, "End Site cannot declare channels", tok.line, tok.column);
      }
      Token count_tok = in_.expect_any("channel count");
      std::size_t count = parse_count(count_tok);
      if (count != 0 && count != 3 && count != 6) {
        throw ParseError(ErrorCode::MalformedSyntax, "channel count must be 0, 3 or 6", count_tok.line,
                         count_tok.column);
      }
      joints_[index].first_column = columns_;
      for (std::size_t c = 0; c < count; ++c) {
        joints_[index].channels.push_back(parse_channel(in_.expect_any("channel name")));
      }
      columns_ += count;
      tok = in_.expect_any("JOINT, End or '}'");
    }
    while (tok.text != "}") {
      if (end_site) {
        throw ParseError(ErrorCode::MalformedSyntax, "End Site cannot have children", tok.line, tok.column);
      }
      if (tok.text == "JOINT") {
        parse_joint_body(index, false);
      } else if (tok.text == "End") {
        parse_joint_body(index, true);
      } else {
        throw ParseError(ErrorCode::MalformedSyntax, "unexpected token '" + std::string(tok.text) + "'",
                         tok.line, tok.column);
      }
      tok = in_.expect_any("JOINT, End or '}'");
    }
  }

  Scanner& in_;
  std::vector<BvhJoint> joints_;
  std::size_t columns_ = 0;
};

Eigen::Matrix3d axis_rotation(BvhChannel channel, double degrees) {
  const double radians = degrees * M_PI / 180.0;
  switch (channel) {
    case BvhChannel::Xrotation: return Eigen::AngleAxisd(radians, Eigen::Vector3d::UnitX()).toRotationMatrix();
    case BvhChannel::Yrotation: return Eigen::AngleAxisd(radians, Eigen::Vector3d::UnitY()).toRotationMatrix();
    case BvhChannel::Zrotation: return Eigen::AngleAxisd(radians, Eigen::Vector3d::UnitZ()).toRotationMatrix();
    default: return Eigen::Matrix3d::Identity();
  }
}

void print_joint(std::ostream& out, const BvhClip& clip, std::size_t index, int depth) {
  const BvhJoint& joint = clip.joints[index];
  const std::string indent(static_cast<std::size_t>(depth) * 2, ' ');
  if (joint.end_site) {
    out << indent << "End Site\n";
  } else {
    out << indent << (joint.parent ? "JOINT " : "ROOT ") << joint.name << "\n";
  }
  out << indent << "{\n";
  out << indent << "  OFFSET " << joint.offset.x() << " " << joint.offset.y() << " " << joint.offset.z() << "\n";
  if (!joint.end_site) {
    out << indent << "  CHANNELS " << joint.channels.size();
    for (BvhChannel c : joint.channels) out << " " << to_string(c);
    out << "\n";
  }
  for (std::size_t child = index + 1; child < clip.joints.size(); ++child) {
    if (clip.joints[child].parent == index) print_joint(out, clip, child, depth + 1);
  }
  out << indent << "}\n";
}

}  // namespace

BvhClip parse_bvh(std::string_view source) {
  Scanner in(source);
  HierarchyParser hierarchy(in);
  BvhClip clip;
  clip.joints = hierarchy.parse();
  const std::size_t columns = hierarchy.channel_total();

  in.expect("MOTION");
  in.expect("Frames:");
  Token frames_tok = in.expect_any("frame count");
  const std::size_t frame_count = parse_count(frames_tok);
  if (frame_count == 0) {
    throw ParseError(ErrorCode::MalformedSyntax, "clip must contain at least one frame", frames_tok.line,
                     frames_tok.column);
  }
  in.expect("Frame");
  in.expect("Time:");
  Token time_tok = in.expect_any("frame time");
  clip.frame_time = parse_number(time_tok);
  if (clip.frame_time <= 0.0) {
    throw ParseError(ErrorCode::MalformedSyntax, "frame time must be positive", time_tok.line, time_tok.column);
  }
  in.skip_rest_of_line();

  clip.frames.resize(static_cast<Eigen::Index>(frame_count), static_cast<Eigen::Index>(columns));
  std::size_t row = 0;
  while (auto line = in.next_line()) {
    Scanner fields(line->text);
    std::size_t col = 0;
    while (auto field = fields.next()) {
      Token located{field->text, line->line, line->column + field->column - 1};
      if (row >= frame_count) {
        throw ParseError(ErrorCode::MalformedSyntax, "more motion rows than the declared frame count",
                         located.line, located.column);
      }
      if (col >= columns) {
        throw ParseError(ErrorCode::ChannelCountMismatch,
                         "motion row has more than " + std::to_string(columns) + " values", located.line,
                         located.column);
      }
      clip.frames(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col)) = parse_number(located);
      ++col;
    }
    if (col == 0) continue;  // blank line
    if (col != columns) {
      throw ParseError(ErrorCode::ChannelCountMismatch,
                       "motion row has " + std::to_string(col) + " values, header declares " +
                           std::to_string(columns),
                       line->line, line->column);
    }
    ++row;
  }
  if (row != frame_count) {
    throw ParseError(ErrorCode::MalformedSyntax,
                     "declared " + std::to_string(frame_count) + " frames but found " + std::to_string(row),
                     frames_tok.line, frames_tok.column);
  }
  return clip;
}

std::vector<Eigen::Vector3d> forward_kinematics(const BvhClip& clip, std::size_t frame) {
  if (frame >= clip.frame_count()) {
    throw Error(ErrorCode::FrameOutOfRange, "frame " + std::to_string(frame) + " out of range (clip has " +
                                                std::to_string(clip.frame_count()) + " frames)");
  }
  const auto row = clip.frames.row(static_cast<Eigen::Index>(frame));
  std::vector<Eigen::Vector3d> positions(clip.joints.size());
  std::vector<Eigen::Matrix3d> rotations(clip.joints.size());
  for (std::size_t i = 0; i < clip.joints.size(); ++i) {
    const BvhJoint& joint = clip.joints[i];
    Eigen::Vector3d local_translation = joint.offset;
    Eigen::Matrix3d local_rotation = Eigen::Matrix3d::Identity();
    for (std::size_t c = 0; c < joint.channels.size(); ++c) {
      const double value = row(static_cast<Eigen::Index>(joint.first_column + c));
      switch (joint.channels[c]) {
        case BvhChannel::Xposition: local_translation.x() += value; break;
        case BvhChannel::Yposition: local_translation.y() += value; break;
        case BvhChannel::Zposition: local_translation.z() += value; break;
        default: local_rotation = local_rotation * axis_rotation(joint.channels[c], value); break;
      }
    }
    if (joint.parent) {
      const std::size_t p = *joint.parent;
      positions[i] = positions[p] + rotations[p] * local_translation;
      rotations[i] = rotations[p] * local_rotation;
    } else {
      positions[i] = local_translation;
      rotations[i] = local_rotation;
    }
  }
  return positions;
}

std::string format_hierarchy(const BvhClip& clip) {
  std::ostringstream out;
  out.precision(17);
  out << "HIERARCHY\n";
  if (!clip.joints.empty()) print_joint(out, clip, 0, 0);
  return out.str();
}

}  // namespace npe
