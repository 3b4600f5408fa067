#include <doctest.h>

#include <string>

#include "darkforge/coco.hpp"

using namespace darkforge;
using nlohmann::json;

namespace {

json sample_doc() {
    return json{
        {"images",
         {{{"id", 1}, {"file_name", "a.jpg"}, {"width", 64}, {"height", 48}},
          {{"id", 2}, {"file_name", "b.jpg"}, {"width", 32}, {"height", 32}}}},
        {"annotations",
         {{{"id", 10},
           {"image_id", 1},
           {"category_id", 3},
           {"bbox", {1.0, 2.0, 10.0, 12.0}},
           {"segmentation", {{1.0, 2.0, 11.0, 2.0, 11.0, 14.0}}},
           {"area", 120.0}}}},
        {"categories", {{{"id", 3}, {"name", "car"}}}}};
}

}  // namespace

TEST_CASE("identity map keeps the document equivalent") {
    const json doc = sample_doc();
    const json out = passthrough_annotations(doc, {{"a.jpg", "a.jpg"}, {"b.jpg", "b.jpg"}});
    CHECK(out == doc);
}

TEST_CASE("file_name fields are remapped, geometry untouched") {
    const json doc = sample_doc();
    const json out =
        passthrough_annotations(doc, {{"a.jpg", "a_dark.png"}, {"b.jpg", "b_dark.png"}});
    CHECK(out["images"][0]["file_name"] == "a_dark.png");
    CHECK(out["images"][1]["file_name"] == "b_dark.png");
    CHECK(out["annotations"] == doc["annotations"]);
    CHECK(out["categories"] == doc["categories"]);
    CHECK(out["images"][0]["width"] == 64);
}

TEST_CASE("missing map entries are reported by name") {
    const json doc = sample_doc();
    try {
        passthrough_annotations(doc, {{"a.jpg", "a_dark.png"}});
        FAIL("expected AnnotationError");
    } catch (const AnnotationError& e) {
        CHECK(std::string(e.what()).find("b.jpg") != std::string::npos);
    }
}
