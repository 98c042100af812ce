#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace star {

inline constexpr uint64_t kLineBytes = 64;
inline constexpr uint64_t kCountersPerBlock = 64;  // minor counters per counter block
inline constexpr uint64_t kTreeArity = 8;
inline constexpr uint64_t kPageBytes = kLineBytes * kCountersPerBlock;  // 4096
inline constexpr uint64_t kBitsPerBitmapLine = 512;

enum class LineKind : uint8_t {
  UserData = 0,
  CounterBlock = 1,
  SitNode = 2,
  BitmapL1 = 3,
  BitmapL2 = 4,
};

// Identifies one 64-byte line in the simulated NVM.  `level` is meaningful
// for metadata: 0 is the counter-block level, 1..N-1 are tree levels.  The
// on-chip root is addressed as SitNode at level == Geometry::levels(); it
// never maps to an NVM offset.
struct LineId {
  LineKind kind = LineKind::UserData;
  uint32_t level = 0;
  uint64_t index = 0;

  bool operator==(const LineId&) const = default;

  uint64_t key() const {
    return (static_cast<uint64_t>(kind) << 60) |
           (static_cast<uint64_t>(level) << 52) | index;
  }

  static LineId user(uint64_t i) { return {LineKind::UserData, 0, i}; }
  static LineId counter_block(uint64_t i) { return {LineKind::CounterBlock, 0, i}; }
  static LineId sit(uint32_t level, uint64_t i) { return {LineKind::SitNode, level, i}; }

  std::string str() const {
    switch (kind) {
      case LineKind::UserData: return "user:" + std::to_string(index);
      case LineKind::CounterBlock: return "cb:" + std::to_string(index);
      case LineKind::SitNode:
        return "sit:L" + std::to_string(level) + ":" + std::to_string(index);
      case LineKind::BitmapL1: return "bm1:" + std::to_string(index);
      case LineKind::BitmapL2: return "bm2:" + std::to_string(index);
    }
    return "?";
  }
};

struct LineIdHash {
  size_t operator()(const LineId& id) const noexcept {
    return std::hash<uint64_t>{}(id.key());
  }
};

// Address-space arithmetic for the simulated memory: user lines, the
// counter-block level, the 8-ary tree levels above it, and the recovery
// area holding spilled bitmap lines.  Level sizes use ceiling division, so
// trailing child slots of a partially filled parent stay permanently unused.
// The level list ends at the first level of size one; its parent is the
// on-chip root register, which is not an NVM line.
class Geometry {
 public:
  explicit Geometry(uint64_t mem_bytes) : mem_bytes_(mem_bytes) {
    if (mem_bytes == 0 || mem_bytes % kPageBytes != 0)
      throw std::invalid_argument("mem_bytes must be a nonzero multiple of 4096");
    user_lines_ = mem_bytes / kLineBytes;
    level_sizes_.push_back(mem_bytes / kPageBytes);
    while (level_sizes_.back() > 1)
      level_sizes_.push_back((level_sizes_.back() + kTreeArity - 1) / kTreeArity);
    level_prefix_.resize(level_sizes_.size() + 1, 0);
    for (size_t i = 0; i < level_sizes_.size(); ++i)
      level_prefix_[i + 1] = level_prefix_[i] + level_sizes_[i];

    user_end_ = mem_bytes_;
    metadata_end_ = user_end_ + metadata_lines() * kLineBytes;
    ra_l1_lines_ = (metadata_lines() + kBitsPerBitmapLine - 1) / kBitsPerBitmapLine;
    ra_l2_lines_ = (ra_l1_lines_ + kBitsPerBitmapLine - 1) / kBitsPerBitmapLine;
    if (ra_l2_lines_ > kBitsPerBitmapLine)
      throw std::invalid_argument("metadata space exceeds the 3-layer index reach");
    ra_l1_end_ = metadata_end_ + ra_l1_lines_ * kLineBytes;
    ra_l2_end_ = ra_l1_end_ + ra_l2_lines_ * kLineBytes;
  }

  uint64_t mem_bytes() const { return mem_bytes_; }
  uint64_t user_lines() const { return user_lines_; }
  const std::vector<uint64_t>& level_sizes() const { return level_sizes_; }

  // NVM-resident SIT levels, counter level included.  The on-chip root sits
  // one above; counting it gives the tree height in the usual
  // counter-node-to-root sense.
  uint32_t levels() const { return static_cast<uint32_t>(level_sizes_.size()); }
  uint32_t levels_including_root() const { return levels() + 1; }
  uint32_t root_level() const { return levels(); }

  bool is_root(const LineId& id) const {
    return id.kind == LineKind::SitNode && id.level == root_level();
  }
  static LineId root_id_for(uint32_t root_level) {
    return LineId::sit(root_level, 0);
  }
  LineId root_id() const { return root_id_for(root_level()); }

  bool valid_metadata(const LineId& id) const {
    if (id.kind == LineKind::CounterBlock) return id.level == 0 && id.index < level_sizes_[0];
    if (id.kind == LineKind::SitNode)
      return id.level >= 1 && id.level < levels() && id.index < level_sizes_[id.level];
    return false;
  }

  LineId parent_of(const LineId& id) const {
    switch (id.kind) {
      case LineKind::UserData:
        return LineId::counter_block(id.index / kCountersPerBlock);
      case LineKind::CounterBlock:
        if (levels() == 1) return root_id();
        return LineId::sit(1, id.index / kTreeArity);
      case LineKind::SitNode:
        if (is_root(id)) throw std::invalid_argument("root has no parent");
        if (id.level + 1 == levels()) return root_id();
        return LineId::sit(id.level + 1, id.index / kTreeArity);
      default:
        throw std::invalid_argument("bitmap lines have no tree parent");
    }
  }

  uint32_t counter_slot(const LineId& child) const {
    if (child.kind == LineKind::UserData)
      return static_cast<uint32_t>(child.index % kCountersPerBlock);
    return static_cast<uint32_t>(child.index % kTreeArity);
  }

  std::pair<LineId, uint32_t> parent_and_slot(const LineId& child) const {
    return {parent_of(child), counter_slot(child)};
  }

  // Children actually present in the geometry; a partially filled parent has
  // fewer than the full arity.
  std::vector<LineId> children_of(const LineId& id) const {
    std::vector<LineId> out;
    if (id.kind == LineKind::UserData)
      throw std::invalid_argument("user data has no children");
    if (id.kind == LineKind::CounterBlock) {
      for (uint64_t i = 0; i < kCountersPerBlock; ++i) {
        uint64_t u = id.index * kCountersPerBlock + i;
        if (u < user_lines_) out.push_back(LineId::user(u));
      }
      return out;
    }
    // SIT node (root included): children live one level down.
    uint32_t child_level = id.level - 1;
    uint64_t child_count = is_root(id) ? level_sizes_.back()
                                       : level_sizes_[child_level];
    uint64_t first = is_root(id) ? 0 : id.index * kTreeArity;
    for (uint64_t i = first; i < first + kTreeArity && i < child_count; ++i) {
      if (child_level == 0) out.push_back(LineId::counter_block(i));
      else out.push_back(LineId::sit(child_level, i));
    }
    return out;
  }

  // --- linear addressing --------------------------------------------------
  // Layout: [user | counter blocks | sit levels 1..N-1 | RA-L1 | RA-L2].

  uint64_t byte_offset(const LineId& id) const {
    switch (id.kind) {
      case LineKind::UserData: return id.index * kLineBytes;
      case LineKind::CounterBlock: return user_end_ + id.index * kLineBytes;
      case LineKind::SitNode:
        if (id.level == 0 || id.level >= levels())
          throw std::invalid_argument("no NVM offset for this node");
        return user_end_ + (level_prefix_[id.level] + id.index) * kLineBytes;
      case LineKind::BitmapL1: return metadata_end_ + id.index * kLineBytes;
      case LineKind::BitmapL2: return ra_l1_end_ + id.index * kLineBytes;
    }
    throw std::invalid_argument("bad line id");
  }

  LineId line_at_offset(uint64_t off) const {
    if (off % kLineBytes != 0) throw std::invalid_argument("unaligned offset");
    uint64_t line = off / kLineBytes;
    if (off < user_end_) return LineId::user(line);
    if (off < metadata_end_) return line_at_ordinal((off - user_end_) / kLineBytes);
    if (off < ra_l1_end_) return {LineKind::BitmapL1, 0, (off - metadata_end_) / kLineBytes};
    if (off < ra_l2_end_) return {LineKind::BitmapL2, 0, (off - ra_l1_end_) / kLineBytes};
    throw std::invalid_argument("offset past end of image");
  }

  uint64_t total_bytes() const { return ra_l2_end_; }

  // --- flattened metadata index (bitmap space) -----------------------------

  uint64_t metadata_lines() const { return level_prefix_.back(); }

  uint64_t metadata_ordinal(const LineId& id) const {
    if (id.kind == LineKind::CounterBlock) return id.index;
    if (id.kind == LineKind::SitNode && id.level >= 1 && id.level < levels())
      return level_prefix_[id.level] + id.index;
    throw std::invalid_argument("not a tracked metadata line");
  }

  LineId line_at_ordinal(uint64_t ord) const {
    if (ord < level_sizes_[0]) return LineId::counter_block(ord);
    for (uint32_t l = 1; l < levels(); ++l)
      if (ord < level_prefix_[l + 1]) return LineId::sit(l, ord - level_prefix_[l]);
    throw std::out_of_range("ordinal past metadata end");
  }

  uint64_t l1_bitmap_lines() const { return ra_l1_lines_; }
  uint64_t l2_bitmap_lines() const { return ra_l2_lines_; }

 private:
  uint64_t mem_bytes_;
  uint64_t user_lines_;
  std::vector<uint64_t> level_sizes_;
  std::vector<uint64_t> level_prefix_;
  uint64_t user_end_ = 0, metadata_end_ = 0, ra_l1_end_ = 0, ra_l2_end_ = 0;
  uint64_t ra_l1_lines_ = 0, ra_l2_lines_ = 0;
};

inline Geometry build_geometry(uint64_t mem_bytes) { return Geometry(mem_bytes); }

}  // namespace star
