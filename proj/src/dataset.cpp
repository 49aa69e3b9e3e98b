#include "fairaug/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <string_view>
#include <unordered_map>

#include "fairaug/errors.hpp"

namespace fairaug {
namespace {

struct RawRow {
  std::string user;
  std::string item;
  std::int64_t timestamp = 0;
};

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find('\t', start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

bool is_number(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

// Numeric ids first (by value), then everything else lexicographically.
bool canonical_less(const std::string& a, const std::string& b) {
  const bool na = is_number(a);
  const bool nb = is_number(b);
  if (na != nb) return na;
  if (na) {
    const auto strip = [](const std::string& s) {
      const auto p = s.find_first_not_of('0');
      return p == std::string::npos ? std::string_view{} : std::string_view(s).substr(p);
    };
    const auto sa = strip(a);
    const auto sb = strip(b);
    if (sa.size() != sb.size()) return sa.size() < sb.size();
    if (sa != sb) return sa < sb;
  }
  return a < b;
}

template <typename Fn>
void for_each_line(const std::filesystem::path& path, Fn&& fn) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    fn(std::string_view(line), number);
  }
}

std::vector<RawRow> read_raw_interactions(const std::filesystem::path& path) {
  std::vector<RawRow> rows;
  for_each_line(path, [&](std::string_view line, std::size_t number) {
    const auto fields = split_tabs(line);
    if (fields.size() != 3) {
      throw ParseError(path.string(), number,
                       "expected 3 tab-separated fields, got " + std::to_string(fields.size()));
    }
    if (fields[0].empty() || fields[1].empty()) {
      throw ParseError(path.string(), number, "empty user or item id");
    }
    RawRow row{std::string(fields[0]), std::string(fields[1]), 0};
    const auto ts = fields[2];
    const auto [ptr, ec] = std::from_chars(ts.data(), ts.data() + ts.size(), row.timestamp);
    if (ec != std::errc() || ptr != ts.data() + ts.size()) {
      throw ParseError(path.string(), number, "timestamp is not an integer: '" + std::string(ts) + "'");
    }
    rows.push_back(std::move(row));
  });
  return rows;
}

std::map<std::string, std::string> read_attributes(const std::filesystem::path& path) {
  std::map<std::string, std::string> labels;
  for_each_line(path, [&](std::string_view line, std::size_t number) {
    const auto fields = split_tabs(line);
    if (fields.size() != 2 || fields[0].empty() || fields[1].empty()) {
      throw ParseError(path.string(), number, "expected user<TAB>group_label");
    }
    const auto [it, inserted] = labels.emplace(std::string(fields[0]), std::string(fields[1]));
    if (!inserted && it->second != fields[1]) {
      throw ParseError(path.string(), number, "conflicting labels for user " + it->first);
    }
  });
  return labels;
}

std::vector<std::string> canonical_names(std::set<std::string> names) {
  std::vector<std::string> out(names.begin(), names.end());
  std::sort(out.begin(), out.end(), canonical_less);
  return out;
}

std::unordered_map<std::string, Index> index_of(const std::vector<std::string>& names) {
  std::unordered_map<std::string, Index> map;
  map.reserve(names.size());
  for (std::size_t i = 0; i < names.size(); ++i) map.emplace(names[i], static_cast<Index>(i));
  return map;
}

// Builds the entity tables for the union of `sets`, attaching group labels.
DatasetInfo build_info(const std::vector<const std::vector<RawRow>*>& sets,
                       const std::map<std::string, std::string>& labels) {
  std::set<std::string> users;
  std::set<std::string> items;
  for (const auto* rows : sets) {
    for (const auto& r : *rows) {
      users.insert(r.user);
      items.insert(r.item);
    }
  }
  if (users.empty()) throw DataError("no interactions");

  DatasetInfo info;
  info.user_names = canonical_names(std::move(users));
  info.item_names = canonical_names(std::move(items));
  info.num_users = static_cast<Index>(info.user_names.size());
  info.num_items = static_cast<Index>(info.item_names.size());

  std::set<std::string> distinct;
  info.group_of.reserve(info.user_names.size());
  for (const auto& name : info.user_names) {
    const auto it = labels.find(name);
    if (it == labels.end()) throw DataError("missing attribute for user " + name);
    info.group_of.push_back(it->second);
    distinct.insert(it->second);
  }
  if (distinct.size() > 2) {
    throw DataError("unsupported attribute: " + std::to_string(distinct.size()) +
                    " distinct group labels, expected a binary attribute");
  }
  return info;
}

std::vector<Interaction> remap(const std::vector<RawRow>& rows, const DatasetInfo& info) {
  const auto users = index_of(info.user_names);
  const auto items = index_of(info.item_names);
  std::vector<Interaction> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back({users.at(r.user), items.at(r.item), r.timestamp});
  return out;
}

void sort_rows(std::vector<Interaction>& rows) {
  std::sort(rows.begin(), rows.end(), [](const Interaction& a, const Interaction& b) {
    if (a.user != b.user) return a.user < b.user;
    if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
    return a.item < b.item;
  });
}

// Keeps one row per (user, item): the one with the latest timestamp.
std::vector<Interaction> collapse_duplicates(std::vector<Interaction> rows) {
  std::sort(rows.begin(), rows.end(), [](const Interaction& a, const Interaction& b) {
    if (a.user != b.user) return a.user < b.user;
    if (a.item != b.item) return a.item < b.item;
    return a.timestamp > b.timestamp;
  });
  rows.erase(std::unique(rows.begin(), rows.end(),
                         [](const Interaction& a, const Interaction& b) {
                           return a.user == b.user && a.item == b.item;
                         }),
             rows.end());
  sort_rows(rows);
  return rows;
}

}  // namespace

InteractionDataset load_interactions(const std::filesystem::path& path,
                                     const std::filesystem::path& attr_path) {
  const auto raw = read_raw_interactions(path);
  if (raw.empty()) throw DataError("no interactions in " + path.string());
  const auto labels = read_attributes(attr_path);

  InteractionDataset ds;
  ds.info = build_info({&raw}, labels);
  ds.interactions = collapse_duplicates(remap(raw, ds.info));
  return ds;
}

SplitDataset temporal_split(const InteractionDataset& ds) {
  const auto n_users = static_cast<std::size_t>(ds.info.num_users);
  std::vector<std::vector<Interaction>> per_user(n_users);
  for (const auto& x : ds.interactions) per_user[static_cast<std::size_t>(x.user)].push_back(x);

  SplitDataset out;
  std::vector<Index> user_map(n_users, -1);
  std::vector<Index> item_map(static_cast<std::size_t>(ds.info.num_items), -1);
  for (std::size_t u = 0; u < n_users; ++u) {
    if (per_user[u].size() < 3) {
      out.warnings.push_back("user " + ds.info.user_names[u] + " has " +
                             std::to_string(per_user[u].size()) +
                             " interaction(s), fewer than 3; dropped from the split");
      continue;
    }
    user_map[u] = 0;
    for (const auto& x : per_user[u]) item_map[static_cast<std::size_t>(x.item)] = 0;
  }

  // Compact ids; ascending order preserves the canonical order.
  DatasetInfo& info = out.info;
  for (std::size_t u = 0; u < n_users; ++u) {
    if (user_map[u] < 0) continue;
    user_map[u] = info.num_users++;
    info.user_names.push_back(ds.info.user_names[u]);
    info.group_of.push_back(ds.info.group_of[u]);
  }
  for (std::size_t i = 0; i < item_map.size(); ++i) {
    if (item_map[i] < 0) continue;
    item_map[i] = info.num_items++;
    info.item_names.push_back(ds.info.item_names[i]);
  }

  for (std::size_t u = 0; u < n_users; ++u) {
    if (user_map[u] < 0) continue;
    auto& rows = per_user[u];
    std::sort(rows.begin(), rows.end(), [](const Interaction& a, const Interaction& b) {
      if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
      return a.item < b.item;
    });
    const std::size_t n = rows.size();
    const std::size_t train_end = (7 * n) / 10;
    const std::size_t valid_end = (8 * n) / 10;
    for (std::size_t r = 0; r < n; ++r) {
      Interaction x{user_map[u], item_map[static_cast<std::size_t>(rows[r].item)], rows[r].timestamp};
      if (r < train_end) {
        out.train.push_back(x);
      } else if (r < valid_end) {
        out.validation.push_back(x);
      } else {
        out.test.push_back(x);
      }
    }
  }
  return out;
}

GroupPartition group_partition(const DatasetInfo& info) {
  std::map<std::string, std::vector<Index>> members;
  for (Index u = 0; u < info.num_users; ++u) {
    members[info.group_of[static_cast<std::size_t>(u)]].push_back(u);
  }
  if (members.size() != 2) {
    throw DataError("unsupported grouping: expected exactly 2 group labels, found " +
                    std::to_string(members.size()));
  }
  GroupPartition partition;
  partition.slot_of.assign(static_cast<std::size_t>(info.num_users), 0);
  int slot = 0;
  for (auto& [label, users] : members) {
    for (const Index u : users) partition.slot_of[static_cast<std::size_t>(u)] = slot;
    partition.groups[static_cast<std::size_t>(slot)] = Group{label, std::move(users)};
    ++slot;
  }
  return partition;
}

void write_interactions(const std::filesystem::path& path, const DatasetInfo& info,
                        const std::vector<Interaction>& rows) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& x : rows) {
    out << info.user_names[static_cast<std::size_t>(x.user)] << '\t'
        << info.item_names[static_cast<std::size_t>(x.item)] << '\t' << x.timestamp << '\n';
  }
}

void write_split(const std::filesystem::path& dir, const SplitDataset& split) {
  std::filesystem::create_directories(dir);
  write_interactions(dir / "train.tsv", split.info, split.train);
  write_interactions(dir / "validation.tsv", split.info, split.validation);
  write_interactions(dir / "test.tsv", split.info, split.test);
  std::ofstream attrs(dir / "attributes.tsv");
  for (Index u = 0; u < split.info.num_users; ++u) {
    attrs << split.info.user_names[static_cast<std::size_t>(u)] << '\t'
          << split.info.group_of[static_cast<std::size_t>(u)] << '\n';
  }
  if (!split.warnings.empty()) {
    std::ofstream log(dir / "split.log");
    for (const auto& w : split.warnings) log << "warning: " << w << '\n';
  }
}

SplitDataset load_split(const std::filesystem::path& dir) {
  for (const char* name : {"train.tsv", "validation.tsv", "test.tsv", "attributes.tsv"}) {
    if (!std::filesystem::exists(dir / name)) {
      throw DataError("missing " + (dir / name).string() + " (run split first)");
    }
  }
  const auto train = read_raw_interactions(dir / "train.tsv");
  const auto validation = read_raw_interactions(dir / "validation.tsv");
  const auto test = read_raw_interactions(dir / "test.tsv");
  const auto labels = read_attributes(dir / "attributes.tsv");

  SplitDataset out;
  out.info = build_info({&train, &validation, &test}, labels);
  out.train = remap(train, out.info);
  out.validation = remap(validation, out.info);
  out.test = remap(test, out.info);
  return out;
}

ItemLists items_by_user(Index num_users, const std::vector<Interaction>& rows) {
  ItemLists lists(static_cast<std::size_t>(num_users));
  for (const auto& x : rows) lists[static_cast<std::size_t>(x.user)].push_back(x.item);
  for (auto& l : lists) {
    std::sort(l.begin(), l.end());
    l.erase(std::unique(l.begin(), l.end()), l.end());
  }
  return lists;
}

}  // namespace fairaug
