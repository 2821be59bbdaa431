#include "mp2rec/data.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

#include "mp2rec/rng.hpp"

namespace mp2rec {

std::optional<RatingsFormat> format_from_name(const std::string& name) {
    if (name == "ml100k" || name == "ml100k-tab") return RatingsFormat::Ml100kTab;
    if (name == "ml1m" || name == "ml1m-double-colon") return RatingsFormat::Ml1mDoubleColon;
    if (name == "csv") return RatingsFormat::Csv;
    return std::nullopt;
}

const char* format_name(RatingsFormat f) {
    switch (f) {
        case RatingsFormat::Ml100kTab: return "ml100k-tab";
        case RatingsFormat::Ml1mDoubleColon: return "ml1m-double-colon";
        case RatingsFormat::Csv: return "csv";
    }
    return "?";
}

std::uint64_t remap_hash_of(const std::vector<std::int64_t>& user_ids,
                            const std::vector<std::int64_t>& item_ids) {
    std::uint64_t h = 14695981039346656037ull;
    auto mix = [&h](std::uint64_t v) {
        for (int b = 0; b < 8; ++b) {
            h ^= (v >> (8 * b)) & 0xff;
            h *= 1099511628211ull;
        }
    };
    mix(user_ids.size());
    for (std::int64_t id : user_ids) mix(static_cast<std::uint64_t>(id));
    mix(item_ids.size());
    for (std::int64_t id : item_ids) mix(static_cast<std::uint64_t>(id));
    return h;
}

std::uint64_t Dataset::remap_hash() const { return remap_hash_of(user_ids, item_ids); }

namespace {

// Splits one record line into exactly four fields.
bool split_fields(const std::string& line, RatingsFormat format, std::string out[4]) {
    std::size_t pos = 0;
    int field = 0;
    const std::string sep = (format == RatingsFormat::Ml100kTab)          ? "\t"
                            : (format == RatingsFormat::Ml1mDoubleColon) ? "::"
                                                                          : ",";
    while (field < 4) {
        const std::size_t next = line.find(sep, pos);
        if (next == std::string::npos) {
            out[field++] = line.substr(pos);
            pos = line.size();
            break;
        }
        out[field++] = line.substr(pos, next - pos);
        pos = next + sep.size();
    }
    return field == 4 && pos >= line.size();
}

std::int64_t parse_int(const std::string& s, const std::string& name, std::size_t line_no) {
    std::int64_t v = 0;
    const char* begin = s.data();
    const char* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc() || ptr != end) {
        throw ParseError(name + ": line " + std::to_string(line_no) + ": bad integer field '" + s + "'");
    }
    return v;
}

double parse_real(const std::string& s, const std::string& name, std::size_t line_no) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ParseError(name + ": line " + std::to_string(line_no) + ": bad numeric field '" + s + "'");
    }
}

}  // namespace

Dataset parse_ratings_stream(std::istream& in, RatingsFormat format, const std::string& name) {
    Dataset data;
    std::unordered_map<std::int64_t, std::size_t> user_map;
    std::unordered_map<std::int64_t, std::size_t> item_map;

    std::string line;
    std::size_t line_no = 0;
    bool first = true;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (first && format == RatingsFormat::Csv && line.rfind("user,", 0) == 0) {
            first = false;
            continue;  // header row
        }
        first = false;

        std::string f[4];
        if (!split_fields(line, format, f)) {
            throw ParseError(name + ": line " + std::to_string(line_no) + ": expected 4 fields");
        }
        const std::int64_t raw_user = parse_int(f[0], name, line_no);
        const std::int64_t raw_item = parse_int(f[1], name, line_no);
        const double rating = parse_real(f[2], name, line_no);
        const std::int64_t timestamp = parse_int(f[3], name, line_no);

        auto [uit, user_new] = user_map.try_emplace(raw_user, data.user_ids.size());
        if (user_new) data.user_ids.push_back(raw_user);
        auto [iit, item_new] = item_map.try_emplace(raw_item, data.item_ids.size());
        if (item_new) data.item_ids.push_back(raw_item);

        data.interactions.push_back({uit->second, iit->second, rating, timestamp});
    }
    if (data.interactions.empty()) {
        throw EmptyDatasetError(name + ": no interactions found");
    }
    return data;
}

Dataset parse_ratings(const std::string& path, RatingsFormat format) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError(path + ": cannot open ratings file");
    }
    return parse_ratings_stream(in, format, path);
}

int binarize(double rating, double threshold) { return rating > threshold ? 1 : 0; }

namespace {

struct UserItems {
    std::vector<std::size_t> items;
    std::vector<double> ratings;
};

}  // namespace

std::vector<TripletSample> sample_pairs(const std::vector<Interaction>& train,
                                        std::size_t pairs_per_user, double threshold,
                                        std::uint64_t seed) {
    if (pairs_per_user == 0) {
        throw std::invalid_argument("sample_pairs: pairs_per_user must be >= 1");
    }
    std::map<std::size_t, UserItems> by_user;
    for (const Interaction& it : train) {
        auto& u = by_user[it.user];
        u.items.push_back(it.item);
        u.ratings.push_back(it.rating);
    }

    std::vector<TripletSample> out;
    for (auto& [user, ui] : by_user) {
        // Group by rating value; a valid pair takes its two items from
        // different groups.
        std::map<double, std::vector<std::size_t>> groups;
        for (std::size_t i = 0; i < ui.items.size(); ++i) {
            groups[ui.ratings[i]].push_back(ui.items[i]);
        }
        if (groups.size() < 2) continue;

        std::vector<double> rating_of;
        std::vector<std::vector<std::size_t>*> group_list;
        for (auto& [r, members] : groups) {
            rating_of.push_back(r);
            group_list.push_back(&members);
        }

        std::uint64_t valid_pairs = 0;
        for (std::size_t a = 0; a < group_list.size(); ++a) {
            for (std::size_t b = a + 1; b < group_list.size(); ++b) {
                valid_pairs += group_list[a]->size() * group_list[b]->size();
            }
        }

        RngStream rng(seed, "data.pairs.user" + std::to_string(user));
        auto emit = [&](std::size_t hi_item, double hi_rating, std::size_t lo_item, double lo_rating) {
            out.push_back({user, hi_item, lo_item,
                           static_cast<double>(binarize(hi_rating, threshold)),
                           static_cast<double>(binarize(lo_rating, threshold))});
        };

        if (valid_pairs <= std::max<std::uint64_t>(256, 4 * pairs_per_user)) {
            // Small pair space: enumerate, shuffle, take the first k.
            std::vector<std::array<std::size_t, 4>> pairs;  // (group a, member, group b, member)
            for (std::size_t a = 0; a < group_list.size(); ++a) {
                for (std::size_t b = a + 1; b < group_list.size(); ++b) {
                    for (std::size_t i = 0; i < group_list[a]->size(); ++i) {
                        for (std::size_t j = 0; j < group_list[b]->size(); ++j) {
                            pairs.push_back({a, i, b, j});
                        }
                    }
                }
            }
            rng.shuffle(pairs);
            const std::size_t take = std::min<std::size_t>(pairs_per_user, pairs.size());
            for (std::size_t p = 0; p < take; ++p) {
                const auto [a, i, b, j] = pairs[p];
                // Groups are rating-sorted, so b has the strictly higher rating.
                emit((*group_list[b])[j], rating_of[b], (*group_list[a])[i], rating_of[a]);
            }
        } else {
            // Large pair space: draw a group pair with probability proportional
            // to its pair count, then uniform members; reject repeats.
            std::vector<std::pair<std::size_t, std::size_t>> group_pairs;
            std::vector<std::uint64_t> cumulative;
            std::uint64_t acc = 0;
            for (std::size_t a = 0; a < group_list.size(); ++a) {
                for (std::size_t b = a + 1; b < group_list.size(); ++b) {
                    acc += group_list[a]->size() * group_list[b]->size();
                    group_pairs.push_back({a, b});
                    cumulative.push_back(acc);
                }
            }
            std::vector<std::pair<std::size_t, std::size_t>> seen;
            std::size_t emitted = 0;
            std::size_t attempts = 0;
            const std::size_t max_attempts = 100 * pairs_per_user;
            while (emitted < pairs_per_user && attempts < max_attempts) {
                ++attempts;
                const std::uint64_t ticket = rng.uniform_below(acc);
                const std::size_t gp = static_cast<std::size_t>(
                    std::upper_bound(cumulative.begin(), cumulative.end(), ticket) - cumulative.begin());
                const auto [a, b] = group_pairs[gp];
                const std::size_t lo = (*group_list[a])[rng.uniform_below(group_list[a]->size())];
                const std::size_t hi = (*group_list[b])[rng.uniform_below(group_list[b]->size())];
                if (std::find(seen.begin(), seen.end(), std::make_pair(hi, lo)) != seen.end()) continue;
                seen.push_back({hi, lo});
                emit(hi, rating_of[b], lo, rating_of[a]);
                ++emitted;
            }
        }
    }
    return out;
}

DatasetSplit split_leave_latest_out(const Dataset& data, double threshold,
                                    std::size_t negatives_per_user, std::uint64_t seed) {
    DatasetSplit split;
    split.n_users = data.n_users();
    split.n_items = data.n_items();
    split.remap_hash = data.remap_hash();

    // Pick each user's held-out positive: latest timestamp, ties toward the
    // larger item id.
    std::vector<std::size_t> positives(data.n_users(), 0);
    std::vector<std::size_t> holdout(data.n_users(), SIZE_MAX);
    for (std::size_t idx = 0; idx < data.interactions.size(); ++idx) {
        const Interaction& it = data.interactions[idx];
        if (binarize(it.rating, threshold) != 1) continue;
        positives[it.user] += 1;
        const std::size_t cur = holdout[it.user];
        if (cur == SIZE_MAX) {
            holdout[it.user] = idx;
            continue;
        }
        const Interaction& best = data.interactions[cur];
        if (it.timestamp > best.timestamp ||
            (it.timestamp == best.timestamp && it.item > best.item)) {
            holdout[it.user] = idx;
        }
    }

    std::vector<bool> held(data.interactions.size(), false);
    for (std::size_t u = 0; u < data.n_users(); ++u) {
        if (positives[u] >= 2) held[holdout[u]] = true;
    }

    std::vector<std::vector<bool>> interacted(data.n_users(), std::vector<bool>(data.n_items(), false));
    for (const Interaction& it : data.interactions) interacted[it.user][it.item] = true;

    for (std::size_t idx = 0; idx < data.interactions.size(); ++idx) {
        if (!held[idx]) split.train.push_back(data.interactions[idx]);
    }
    for (std::size_t u = 0; u < data.n_users(); ++u) {
        if (positives[u] < 2) continue;
        const Interaction& it = data.interactions[holdout[u]];
        TestCase tc;
        tc.user = u;
        tc.item = it.item;
        RngStream rng(seed, "data.negatives.user" + std::to_string(u));
        tc.negatives = sample_negatives(interacted[u], negatives_per_user, rng);
        split.test.push_back(std::move(tc));
    }
    return split;
}

std::vector<std::size_t> sample_negatives(const std::vector<bool>& interacted, std::size_t n,
                                          RngStream& rng) {
    if (n == 0) throw std::invalid_argument("sample_negatives: n must be >= 1");
    const std::size_t catalog = interacted.size();
    std::size_t available = 0;
    for (bool b : interacted) available += b ? 0 : 1;
    if (available < n) {
        throw std::invalid_argument("sample_negatives: catalog too small (" +
                                    std::to_string(available) + " candidates for " +
                                    std::to_string(n) + " draws)");
    }
    std::vector<std::size_t> out;
    out.reserve(n);
    if (available == n) {
        for (std::size_t i = 0; i < catalog; ++i) {
            if (!interacted[i]) out.push_back(i);
        }
        return out;
    }
    std::vector<bool> taken(catalog, false);
    while (out.size() < n) {
        const std::size_t cand = static_cast<std::size_t>(rng.uniform_below(catalog));
        if (interacted[cand] || taken[cand]) continue;
        taken[cand] = true;
        out.push_back(cand);
    }
    return out;
}

std::vector<std::vector<TripletSample>> make_batches(const std::vector<TripletSample>& samples,
                                                     std::size_t batch_size, std::uint64_t epoch_seed) {
    if (batch_size == 0) throw std::invalid_argument("make_batches: batch_size must be >= 1");
    std::vector<std::size_t> order(samples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    RngStream rng(epoch_seed, "data.batch_shuffle");
    rng.shuffle(order);

    std::vector<std::vector<TripletSample>> batches;
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
        const std::size_t stop = std::min(order.size(), start + batch_size);
        std::vector<TripletSample> batch;
        batch.reserve(stop - start);
        for (std::size_t i = start; i < stop; ++i) batch.push_back(samples[order[i]]);
        batches.push_back(std::move(batch));
    }
    return batches;
}

void write_split_manifest(const std::string& path, const DatasetSplit& split) {
    std::ofstream out(path);
    if (!out) throw ParseError(path + ": cannot open manifest for writing");
    out << "#users\t" << split.n_users << "\titems\t" << split.n_items << "\tremap\t"
        << split.remap_hash << "\n";
    for (const TestCase& tc : split.test) {
        out << tc.user << '\t' << tc.item << '\t';
        for (std::size_t i = 0; i < tc.negatives.size(); ++i) {
            if (i) out << ',';
            out << tc.negatives[i];
        }
        out << '\n';
    }
}

DatasetSplit read_split_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path + ": cannot open manifest");
    DatasetSplit split;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::istringstream hs(line.substr(1));
            std::string k1, k2;
            if (!(hs >> k1 >> split.n_users >> k2 >> split.n_items) || k1 != "users" || k2 != "items") {
                throw ParseError(path + ": line " + std::to_string(line_no) + ": bad manifest header");
            }
            std::string k3;
            if (hs >> k3 >> split.remap_hash && k3 != "remap") {
                throw ParseError(path + ": line " + std::to_string(line_no) + ": bad manifest header");
            }
            continue;
        }
        std::istringstream ls(line);
        TestCase tc;
        std::string negs;
        if (!(ls >> tc.user >> tc.item >> negs)) {
            throw ParseError(path + ": line " + std::to_string(line_no) + ": expected user, item, negatives");
        }
        std::istringstream ns(negs);
        std::string tok;
        while (std::getline(ns, tok, ',')) {
            tc.negatives.push_back(static_cast<std::size_t>(parse_int(tok, path, line_no)));
        }
        split.test.push_back(std::move(tc));
    }
    if (split.test.empty()) throw EmptyDatasetError(path + ": manifest has no test users");
    return split;
}

void write_id_map(const std::string& path, const std::vector<std::int64_t>& dense_to_raw) {
    std::ofstream out(path);
    if (!out) throw ParseError(path + ": cannot open id map for writing");
    for (std::size_t dense = 0; dense < dense_to_raw.size(); ++dense) {
        out << dense_to_raw[dense] << '\t' << dense << '\n';
    }
}

std::vector<std::int64_t> read_id_map(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path + ": cannot open id map");
    std::vector<std::int64_t> dense_to_raw;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::int64_t raw = 0;
        std::size_t dense = 0;
        if (!(ls >> raw >> dense) || dense != dense_to_raw.size()) {
            throw ParseError(path + ": line " + std::to_string(line_no) + ": bad id map entry");
        }
        dense_to_raw.push_back(raw);
    }
    return dense_to_raw;
}

}  // namespace mp2rec
