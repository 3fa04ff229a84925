#include "anomforge/remote_providers.hpp"

#include <httplib.h>

#include <fmt/format.h>

#include "anomforge/error.hpp"

namespace anomforge {

using nlohmann::json;

Endpoint parse_endpoint(std::string_view url) {
  constexpr std::string_view scheme = "http://";
  if (url.substr(0, scheme.size()) != scheme)
    throw validation_error(fmt::format("provider url '{}' must start with http://", url));
  const auto rest = url.substr(scheme.size());
  const auto slash = rest.find('/');
  const auto host = rest.substr(0, slash);
  if (host.empty()) throw validation_error(fmt::format("provider url '{}' has no host", url));
  Endpoint ep;
  ep.origin = fmt::format("{}{}", scheme, host);
  ep.path = slash == std::string_view::npos ? "/" : std::string(rest.substr(slash));
  return ep;
}

TraceLog::TraceLog(const std::filesystem::path& path) : out_(path, std::ios::binary | std::ios::app) {
  if (!out_) throw io_error(fmt::format("cannot open trace log '{}'", path.string()));
}

void TraceLog::record(std::string_view direction, std::string_view url, std::string_view body) {
  std::lock_guard lock(mutex_);
  out_ << direction << ' ' << url << ' ' << body.size() << '\n';
  out_.write(body.data(), static_cast<std::streamsize>(body.size()));
  out_ << '\n';
  out_.flush();
}

HttpJsonTransport::HttpJsonTransport(std::string url, std::shared_ptr<TraceLog> trace,
                                     std::chrono::seconds timeout)
    : url_(std::move(url)), endpoint_(parse_endpoint(url_)), trace_(std::move(trace)), timeout_(timeout) {}

json HttpJsonTransport::post(const json& request) const {
  const auto body = request.dump();
  if (trace_) trace_->record(">", url_, body);

  httplib::Client client(endpoint_.origin);
  client.set_connection_timeout(timeout_);
  client.set_read_timeout(timeout_);
  client.set_write_timeout(timeout_);
  auto res = client.Post(endpoint_.path, body, "application/json");
  if (!res)
    throw provider_error(fmt::format("provider {} unreachable: {}", url_, httplib::to_string(res.error())));
  if (trace_) trace_->record("<", url_, res->body);
  if (res->status != 200)
    throw provider_error(fmt::format("provider {} returned HTTP {}: {}", url_, res->status, res->body));
  try {
    return json::parse(res->body);
  } catch (const json::parse_error& e) {
    throw provider_error(fmt::format("provider {} returned malformed JSON: {}", url_, e.what()));
  }
}

std::string encode_image_payload(const RasterImage& image) { return base64_encode(encode_png(image)); }

RasterImage decode_image_payload(std::string_view payload) {
  try {
    return decode_png(base64_decode(payload));
  } catch (const Error& e) {
    throw provider_error(fmt::format("bad image payload: {}", e.what()));
  }
}

namespace {

template <typename Fn>
auto read_response(const HttpJsonTransport& transport, Fn&& fn) {
  try {
    return fn();
  } catch (const json::exception& e) {
    throw provider_error(fmt::format("provider {} response does not match schema: {}", transport.url(),
                                     e.what()));
  }
}

}  // namespace

std::vector<double> RemoteEmbeddingProvider::request(std::string_view kind, std::string payload) const {
  const auto res = transport_.post({{"kind", kind}, {"payload", std::move(payload)}});
  return read_response(transport_, [&] {
    auto values = res.at("values").get<std::vector<double>>();
    const auto dim = res.at("dim").get<std::size_t>();
    if (dim != values.size())
      throw provider_error(fmt::format("provider {} reported dim {} but sent {} values", transport_.url(),
                                       dim, values.size()));
    return values;
  });
}

std::vector<double> RemoteEmbeddingProvider::raw_embed_image(const RasterImage& image) const {
  return request("image", encode_image_payload(image));
}

std::vector<double> RemoteEmbeddingProvider::raw_embed_text(std::string_view text) const {
  return request("text", std::string(text));
}

std::vector<RasterImage> RemoteInpaintingProvider::raw_inpaint(const RasterImage& image, const Rect& mask,
                                                               std::string_view prompt, int n,
                                                               std::uint64_t seed) const {
  const auto res = transport_.post({{"image", encode_image_payload(image)},
                                    {"mask", to_json(mask)},
                                    {"prompt", prompt},
                                    {"n", n},
                                    {"seed", seed}});
  return read_response(transport_, [&] {
    std::vector<RasterImage> out;
    for (const auto& img : res.at("images")) out.push_back(decode_image_payload(img.get<std::string>()));
    return out;
  });
}

std::vector<Region> RemoteRegionProvider::raw_propose_regions(const RasterImage& image,
                                                              const QueryContext&) const {
  const auto res = transport_.post({{"image", encode_image_payload(image)}});
  return read_response(transport_, [&] {
    std::vector<Region> out;
    for (const auto& r : res.at("regions")) {
      try {
        out.push_back(region_from_json(r));
      } catch (const Error& e) {
        throw provider_error(fmt::format("provider {}: {}", transport_.url(), e.what()));
      }
    }
    return out;
  });
}

std::string RemoteVqaProvider::raw_answer(const RasterImage& image, std::string_view prompt,
                                          const QueryContext&) const {
  const auto res = transport_.post({{"image", encode_image_payload(image)}, {"prompt", prompt}});
  return read_response(transport_, [&] { return res.at("answer").get<std::string>(); });
}

std::string RemoteDescriptionProvider::raw_describe(std::string_view text) const {
  const auto res = transport_.post({{"text", text}});
  return read_response(transport_, [&] { return res.at("description").get<std::string>(); });
}

}  // namespace anomforge
