#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "semgraph/geometry.hpp"

namespace semgraph {

using ObjectId = std::uint64_t;
using RoomId = std::string;

struct RoomNode {
  RoomId id;
  std::string name;
  /// Simple polygon in the map x-y plane, counter-clockwise.
  std::vector<Eigen::Vector2d> polygon;
};

struct ObjectNode {
  ObjectId id = 0;
  std::string label;
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  std::optional<Eigen::Vector3d> dimensions;
  std::int64_t first_seen = 0;
  std::int64_t last_seen = 0;
  int misses = 0;
  /// Target of the containment edge.
  RoomId room;
  std::map<std::string, std::string> attributes;
};

struct RelationKey {
  ObjectId source = 0;
  ObjectId target = 0;
  std::string predicate;

  auto operator<=>(const RelationKey&) const = default;
};

struct RelationEdge {
  ObjectId source = 0;
  ObjectId target = 0;
  std::string predicate;
  double probability = 0.0;
  std::int64_t last_seen = 0;
};

enum class RelationOutcome { Inserted, Replaced, Rejected };

/// Directed graph of rooms, objects and their relations. Every object has
/// exactly one containment edge (ObjectNode::room); relation edges only ever
/// reference live objects. Object ids are monotonic and never reused.
class SemanticMap {
 public:
  /// Groups several mutations into one revision step. While any batch is
  /// open the revision counter is frozen; closing the outermost batch bumps it
  /// exactly once.
  class Batch {
   public:
    explicit Batch(SemanticMap& map) : map_(map) { ++map_.batch_depth_; }
    ~Batch() {
      if (--map_.batch_depth_ == 0) ++map_.revision_;
    }
    Batch(const Batch&) = delete;
    Batch& operator=(const Batch&) = delete;

   private:
    SemanticMap& map_;
  };

  SemanticMap() = default;

  /// Throws InvalidPolygon; the polygon is reordered counter-clockwise.
  void add_room(RoomNode room);
  /// Throws UnknownRoomInConnection or InvalidInput for self-loops.
  void add_connection(const RoomId& a, const RoomId& b);

  /// Room whose polygon contains (x, y), boundary included; otherwise the
  /// nearest room. Ties go to the smallest id. Throws NoRooms.
  const RoomId& assign_room(const Eigen::Vector3d& p) const;

  ObjectId upsert_object(const std::string& label, const Eigen::Vector3d& position,
                         std::int64_t frame_idx);
  void update_object(ObjectId id, const Eigen::Vector3d& position, std::int64_t frame_idx);
  void set_object_dimensions(ObjectId id, const Eigen::Vector3d& dims);
  void set_misses(ObjectId id, int misses);
  void remove_object(ObjectId id);

  /// Inserts or replaces (latest probability wins) when probability >=
  /// threshold; otherwise leaves the map untouched and reports Rejected.
  RelationOutcome upsert_relation(ObjectId source, ObjectId target, const std::string& predicate,
                                  double probability, std::int64_t frame_idx, double threshold);

  /// Fewest-hop route over room connections; lexicographically smallest among
  /// equally short routes. Throws UnknownRoom or NoPath.
  std::vector<RoomId> room_path(const RoomId& from, const RoomId& to) const;
  std::vector<ObjectId> objects_in_room(const RoomId& room) const;
  std::vector<ObjectId> find_objects(const std::string& label) const;

  bool has_object(ObjectId id) const { return objects_.contains(id); }
  bool has_room(const RoomId& id) const { return rooms_.contains(id); }
  const ObjectNode& object(ObjectId id) const;

  const std::map<RoomId, RoomNode>& rooms() const { return rooms_; }
  const std::map<ObjectId, ObjectNode>& objects() const { return objects_; }
  const std::map<RelationKey, RelationEdge>& relations() const { return relations_; }
  const std::set<std::pair<RoomId, RoomId>>& connections() const { return connections_; }
  std::uint64_t revision() const { return revision_; }
  ObjectId next_object_id() const { return next_id_; }

  /// Immutable deep copy; its revision() tags the state it was taken from.
  std::shared_ptr<const SemanticMap> snapshot() const {
    return std::make_shared<const SemanticMap>(*this);
  }

  /// Rebuilds a map from export_json output.
  static SemanticMap from_export(const std::string& json_text);

 private:
  void touch() {
    if (batch_depth_ == 0) ++revision_;
  }
  ObjectNode& object_mut(ObjectId id);

  std::map<RoomId, RoomNode> rooms_;
  std::set<std::pair<RoomId, RoomId>> connections_;
  std::map<ObjectId, ObjectNode> objects_;
  std::map<RelationKey, RelationEdge> relations_;
  ObjectId next_id_ = 1;
  std::uint64_t revision_ = 0;
  int batch_depth_ = 0;
};

/// Parses a room file:
/// {"rooms":[{"id","name","polygon":[[x,y],...]}],"connections":[[a,b],...]}.
SemanticMap rooms_from_json_text(const std::string& text);
SemanticMap load_rooms(const std::filesystem::path& path);

/// Deterministic JSON export: sorted keys, objects and edges ordered by id.
std::string export_json(const SemanticMap& map);
/// Graphviz rendering: rooms as boxes, objects as ellipses, containment dashed.
std::string export_dot(const SemanticMap& map);

/// Geometry helpers exposed for tests.
bool point_in_polygon(const Eigen::Vector2d& p, const std::vector<Eigen::Vector2d>& polygon);
double distance_to_polygon(const Eigen::Vector2d& p, const std::vector<Eigen::Vector2d>& polygon);

}  // namespace semgraph
