#include "semgraph/graph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace semgraph {

using nlohmann::json;

namespace {

double cross2(const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  return a.x() * b.y() - a.y() * b.x();
}

double segment_distance(const Eigen::Vector2d& p, const Eigen::Vector2d& a,
                        const Eigen::Vector2d& b) {
  const Eigen::Vector2d ab = b - a;
  const double len2 = ab.squaredNorm();
  double t = len2 > 0 ? (p - a).dot(ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return (a + t * ab - p).norm();
}

int orientation(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& c) {
  const double v = cross2(b - a, c - a);
  if (v > 0) return 1;
  if (v < 0) return -1;
  return 0;
}

bool on_segment(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& p) {
  return std::min(a.x(), b.x()) <= p.x() && p.x() <= std::max(a.x(), b.x()) &&
         std::min(a.y(), b.y()) <= p.y() && p.y() <= std::max(a.y(), b.y());
}

bool segments_intersect(const Eigen::Vector2d& p1, const Eigen::Vector2d& p2,
                        const Eigen::Vector2d& q1, const Eigen::Vector2d& q2) {
  const int o1 = orientation(p1, p2, q1);
  const int o2 = orientation(p1, p2, q2);
  const int o3 = orientation(q1, q2, p1);
  const int o4 = orientation(q1, q2, p2);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment(p1, p2, q1)) return true;
  if (o2 == 0 && on_segment(p1, p2, q2)) return true;
  if (o3 == 0 && on_segment(q1, q2, p1)) return true;
  if (o4 == 0 && on_segment(q1, q2, p2)) return true;
  return false;
}

void validate_polygon(const RoomNode& room) {
  const auto& poly = room.polygon;
  const std::size_t n = poly.size();
  if (n < 3) {
    throw Error(ErrorCode::InvalidPolygon, "room '" + room.id + "' needs at least 3 vertices");
  }
  for (const auto& v : poly) {
    if (!v.allFinite()) {
      throw Error(ErrorCode::InvalidPolygon, "room '" + room.id + "' has a non-finite vertex");
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if ((poly[i] - poly[(i + 1) % n]).norm() == 0.0) {
      throw Error(ErrorCode::InvalidPolygon, "room '" + room.id + "' repeats a vertex");
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool adjacent = j == i + 1 || (i == 0 && j == n - 1);
      if (adjacent) continue;
      if (segments_intersect(poly[i], poly[(i + 1) % n], poly[j], poly[(j + 1) % n])) {
        throw Error(ErrorCode::InvalidPolygon, "room '" + room.id + "' is self-intersecting");
      }
    }
  }
}

double signed_area(const std::vector<Eigen::Vector2d>& poly) {
  double a = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) a += cross2(poly[i], poly[(i + 1) % poly.size()]);
  return 0.5 * a;
}

Eigen::Vector3d vec3_from_json(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) {
    throw Error(ErrorCode::ParseError, std::string(what) + " must be a 3-element array");
  }
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json vec3_to_json(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }

std::string dot_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  return out;
}

json rooms_to_json(const SemanticMap& map) {
  json rooms = json::array();
  for (const auto& [id, room] : map.rooms()) {
    json poly = json::array();
    for (const auto& v : room.polygon) poly.push_back(json::array({v.x(), v.y()}));
    rooms.push_back({{"id", id}, {"name", room.name}, {"polygon", poly}});
  }
  return rooms;
}

json connections_to_json(const SemanticMap& map) {
  json out = json::array();
  for (const auto& [a, b] : map.connections()) out.push_back(json::array({a, b}));
  return out;
}

void rooms_into_map(const json& doc, SemanticMap& map) {
  if (!doc.is_object() || !doc.contains("rooms") || !doc["rooms"].is_array()) {
    throw Error(ErrorCode::ParseError, "expected an object with a 'rooms' array");
  }
  if (doc["rooms"].empty()) {
    throw Error(ErrorCode::InvalidInput, "a map needs at least one room");
  }
  for (const auto& r : doc["rooms"]) {
    RoomNode room;
    room.id = r.at("id").get<std::string>();
    room.name = r.value("name", room.id);
    for (const auto& v : r.at("polygon")) {
      if (!v.is_array() || v.size() != 2) {
        throw Error(ErrorCode::ParseError, "polygon vertices must be [x, y] pairs");
      }
      room.polygon.emplace_back(v[0].get<double>(), v[1].get<double>());
    }
    map.add_room(std::move(room));
  }
  if (doc.contains("connections")) {
    for (const auto& c : doc["connections"]) {
      if (!c.is_array() || c.size() != 2) {
        throw Error(ErrorCode::ParseError, "connections must be [room, room] pairs");
      }
      map.add_connection(c[0].get<std::string>(), c[1].get<std::string>());
    }
  }
}

}  // namespace

bool point_in_polygon(const Eigen::Vector2d& p, const std::vector<Eigen::Vector2d>& polygon) {
  const std::size_t n = polygon.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (segment_distance(p, polygon[i], polygon[(i + 1) % n]) == 0.0) return true;
  }
  bool inside = false;
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const auto& a = polygon[i];
    const auto& b = polygon[j];
    if ((a.y() > p.y()) != (b.y() > p.y())) {
      const double x_cross = (b.x() - a.x()) * (p.y() - a.y()) / (b.y() - a.y()) + a.x();
      if (p.x() < x_cross) inside = !inside;
    }
  }
  return inside;
}

double distance_to_polygon(const Eigen::Vector2d& p, const std::vector<Eigen::Vector2d>& polygon) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < polygon.size(); ++i) {
    best = std::min(best, segment_distance(p, polygon[i], polygon[(i + 1) % polygon.size()]));
  }
  return best;
}

void SemanticMap::add_room(RoomNode room) {
  if (room.id.empty()) throw Error(ErrorCode::InvalidInput, "room id must not be empty");
  if (rooms_.contains(room.id)) {
    throw Error(ErrorCode::InvalidInput, "duplicate room id '" + room.id + "'");
  }
  validate_polygon(room);
  if (signed_area(room.polygon) < 0) std::reverse(room.polygon.begin(), room.polygon.end());
  const RoomId id = room.id;
  rooms_.emplace(id, std::move(room));
  touch();
}

void SemanticMap::add_connection(const RoomId& a, const RoomId& b) {
  if (!rooms_.contains(a) || !rooms_.contains(b)) {
    throw Error(ErrorCode::UnknownRoomInConnection, a + " - " + b);
  }
  if (a == b) throw Error(ErrorCode::InvalidInput, "room '" + a + "' connected to itself");
  auto key = a < b ? std::make_pair(a, b) : std::make_pair(b, a);
  if (connections_.contains(key)) {
    throw Error(ErrorCode::InvalidInput, "duplicate connection " + a + " - " + b);
  }
  connections_.insert(std::move(key));
  touch();
}

const RoomId& SemanticMap::assign_room(const Eigen::Vector3d& p) const {
  if (rooms_.empty()) throw Error(ErrorCode::NoRooms, "cannot assign a room in an empty map");
  const Eigen::Vector2d xy(p.x(), p.y());
  for (const auto& [id, room] : rooms_) {
    if (point_in_polygon(xy, room.polygon)) return id;
  }
  const RoomId* best = nullptr;
  double best_d = std::numeric_limits<double>::infinity();
  for (const auto& [id, room] : rooms_) {
    const double d = distance_to_polygon(xy, room.polygon);
    if (d < best_d) {
      best_d = d;
      best = &id;
    }
  }
  return *best;
}

ObjectNode& SemanticMap::object_mut(ObjectId id) {
  auto it = objects_.find(id);
  if (it == objects_.end()) throw Error(ErrorCode::UnknownObject, std::to_string(id));
  return it->second;
}

const ObjectNode& SemanticMap::object(ObjectId id) const {
  auto it = objects_.find(id);
  if (it == objects_.end()) throw Error(ErrorCode::UnknownObject, std::to_string(id));
  return it->second;
}

ObjectId SemanticMap::upsert_object(const std::string& label, const Eigen::Vector3d& position,
                                    std::int64_t frame_idx) {
  if (!position.allFinite()) throw Error(ErrorCode::InvalidInput, "object position not finite");
  ObjectNode node;
  node.id = next_id_;
  node.label = label;
  node.position = position;
  node.first_seen = frame_idx;
  node.last_seen = frame_idx;
  node.room = assign_room(position);
  objects_.emplace(node.id, std::move(node));
  ++next_id_;
  touch();
  return next_id_ - 1;
}

void SemanticMap::update_object(ObjectId id, const Eigen::Vector3d& position,
                                std::int64_t frame_idx) {
  if (!position.allFinite()) throw Error(ErrorCode::InvalidInput, "object position not finite");
  ObjectNode& node = object_mut(id);
  node.position = position;
  node.last_seen = frame_idx;
  node.room = assign_room(position);
  touch();
}

void SemanticMap::set_object_dimensions(ObjectId id, const Eigen::Vector3d& dims) {
  object_mut(id).dimensions = dims;
  touch();
}

void SemanticMap::set_misses(ObjectId id, int misses) {
  object_mut(id).misses = misses;
  touch();
}

void SemanticMap::remove_object(ObjectId id) {
  if (!objects_.contains(id)) throw Error(ErrorCode::UnknownObject, std::to_string(id));
  std::erase_if(relations_, [id](const auto& kv) {
    return kv.first.source == id || kv.first.target == id;
  });
  objects_.erase(id);
  touch();
}

RelationOutcome SemanticMap::upsert_relation(ObjectId source, ObjectId target,
                                             const std::string& predicate, double probability,
                                             std::int64_t frame_idx, double threshold) {
  if (!objects_.contains(source) || !objects_.contains(target)) {
    throw Error(ErrorCode::UnknownEndpoint,
                std::to_string(source) + " -> " + std::to_string(target));
  }
  if (source == target) throw Error(ErrorCode::SelfRelation, std::to_string(source));
  if (!(probability >= threshold)) return RelationOutcome::Rejected;

  RelationKey key{source, target, predicate};
  auto it = relations_.find(key);
  const bool existed = it != relations_.end();
  relations_[key] = RelationEdge{source, target, predicate, probability, frame_idx};
  touch();
  return existed ? RelationOutcome::Replaced : RelationOutcome::Inserted;
}

std::vector<RoomId> SemanticMap::room_path(const RoomId& from, const RoomId& to) const {
  if (!rooms_.contains(from)) throw Error(ErrorCode::UnknownRoom, from);
  if (!rooms_.contains(to)) throw Error(ErrorCode::UnknownRoom, to);

  std::map<RoomId, std::set<RoomId>> adj;
  for (const auto& [a, b] : connections_) {
    adj[a].insert(b);
    adj[b].insert(a);
  }
  // Hop distance to the destination, then walk forward greedily picking the
  // smallest neighbour that stays on a shortest route.
  std::map<RoomId, int> dist{{to, 0}};
  std::deque<RoomId> queue{to};
  while (!queue.empty()) {
    const RoomId cur = queue.front();
    queue.pop_front();
    for (const auto& nb : adj[cur]) {
      if (dist.emplace(nb, dist[cur] + 1).second) queue.push_back(nb);
    }
  }
  if (!dist.contains(from)) throw Error(ErrorCode::NoPath, from + " -> " + to);

  std::vector<RoomId> path{from};
  while (path.back() != to) {
    const int d = dist.at(path.back());
    for (const auto& nb : adj[path.back()]) {
      auto it = dist.find(nb);
      if (it != dist.end() && it->second == d - 1) {
        path.push_back(nb);
        break;
      }
    }
  }
  return path;
}

std::vector<ObjectId> SemanticMap::objects_in_room(const RoomId& room) const {
  if (!rooms_.contains(room)) throw Error(ErrorCode::UnknownRoom, room);
  std::vector<ObjectId> out;
  for (const auto& [id, obj] : objects_) {
    if (obj.room == room) out.push_back(id);
  }
  return out;
}

std::vector<ObjectId> SemanticMap::find_objects(const std::string& label) const {
  std::vector<ObjectId> out;
  for (const auto& [id, obj] : objects_) {
    if (obj.label == label) out.push_back(id);
  }
  return out;
}

SemanticMap rooms_from_json_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
  SemanticMap map;
  try {
    rooms_into_map(doc, map);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
  return map;
}

SemanticMap load_rooms(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open room file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return rooms_from_json_text(ss.str());
}

std::string export_json(const SemanticMap& map) {
  json objects = json::array();
  for (const auto& [id, obj] : map.objects()) {
    json o = {{"id", id},
              {"label", obj.label},
              {"position", vec3_to_json(obj.position)},
              {"room", obj.room},
              {"first_seen", obj.first_seen},
              {"last_seen", obj.last_seen},
              {"misses", obj.misses}};
    if (obj.dimensions) o["dimensions"] = vec3_to_json(*obj.dimensions);
    if (!obj.attributes.empty()) o["attributes"] = obj.attributes;
    objects.push_back(std::move(o));
  }
  json relations = json::array();
  for (const auto& [key, edge] : map.relations()) {
    relations.push_back({{"source", edge.source},
                         {"target", edge.target},
                         {"predicate", edge.predicate},
                         {"probability", edge.probability},
                         {"last_seen", edge.last_seen}});
  }
  json doc = {{"revision", map.revision()},
              {"next_object_id", map.next_object_id()},
              {"rooms", rooms_to_json(map)},
              {"room_connections", connections_to_json(map)},
              {"objects", std::move(objects)},
              {"relations", std::move(relations)}};
  return doc.dump(2) + "\n";
}

SemanticMap SemanticMap::from_export(const std::string& json_text) {
  SemanticMap map;
  try {
    const json doc = json::parse(json_text);
    json rooms_doc = {{"rooms", doc.at("rooms")},
                      {"connections", doc.value("room_connections", json::array())}};
    rooms_into_map(rooms_doc, map);
    for (const auto& o : doc.at("objects")) {
      ObjectNode node;
      node.id = o.at("id").get<ObjectId>();
      node.label = o.at("label").get<std::string>();
      node.position = vec3_from_json(o.at("position"), "position");
      node.room = o.at("room").get<std::string>();
      node.first_seen = o.value("first_seen", std::int64_t{0});
      node.last_seen = o.value("last_seen", std::int64_t{0});
      node.misses = o.value("misses", 0);
      if (o.contains("dimensions")) node.dimensions = vec3_from_json(o["dimensions"], "dimensions");
      if (o.contains("attributes")) {
        node.attributes = o["attributes"].get<std::map<std::string, std::string>>();
      }
      if (!map.rooms_.contains(node.room)) throw Error(ErrorCode::UnknownRoom, node.room);
      if (node.id == 0 || map.objects_.contains(node.id)) {
        throw Error(ErrorCode::ParseError, "invalid or duplicate object id");
      }
      map.next_id_ = std::max(map.next_id_, node.id + 1);
      map.objects_.emplace(node.id, std::move(node));
    }
    for (const auto& r : doc.at("relations")) {
      RelationEdge e{r.at("source").get<ObjectId>(), r.at("target").get<ObjectId>(),
                     r.at("predicate").get<std::string>(), r.at("probability").get<double>(),
                     r.value("last_seen", std::int64_t{0})};
      if (!map.objects_.contains(e.source) || !map.objects_.contains(e.target)) {
        throw Error(ErrorCode::UnknownEndpoint, "relation references a missing object");
      }
      map.relations_[{e.source, e.target, e.predicate}] = e;
    }
    map.next_id_ = std::max(map.next_id_, doc.value("next_object_id", ObjectId{1}));
    map.revision_ = doc.value("revision", std::uint64_t{0});
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
  return map;
}

std::string export_dot(const SemanticMap& map) {
  std::ostringstream out;
  out << "digraph semantic_map {\n";
  out << "  rankdir=LR;\n";
  for (const auto& [id, room] : map.rooms()) {
    out << "  \"room:" << dot_escape(id) << "\" [shape=box, label=\"" << dot_escape(room.name)
        << "\"];\n";
  }
  for (const auto& [id, obj] : map.objects()) {
    out << "  \"obj:" << id << "\" [shape=ellipse, label=\"" << dot_escape(obj.label) << " #"
        << id << "\"];\n";
  }
  for (const auto& [a, b] : map.connections()) {
    out << "  \"room:" << dot_escape(a) << "\" -> \"room:" << dot_escape(b)
        << "\" [dir=none];\n";
  }
  for (const auto& [id, obj] : map.objects()) {
    out << "  \"obj:" << id << "\" -> \"room:" << dot_escape(obj.room) << "\" [style=dashed];\n";
  }
  for (const auto& [key, edge] : map.relations()) {
    char prob[32];
    std::snprintf(prob, sizeof(prob), "%.2f", edge.probability);
    out << "  \"obj:" << edge.source << "\" -> \"obj:" << edge.target << "\" [label=\""
        << dot_escape(edge.predicate) << " (p=" << prob << ")\"];\n";
  }
  out << "}\n";
  return out.str();
}

}  // namespace semgraph
