#include <gtest/gtest.h>

#include "skydist/refdata.hpp"

namespace skydist {
namespace {

ClassGroups test_groups() { return load_class_groups("sky 0\ngroup Trees 5\n"); }

Skyline small_skyline() {
    Skyline s;
    s.signal.y = {10, 12, 11, 11, 0, 0};
    s.signal.width = 6;
    s.signal.height = 20;
    s.column_class = {5, 5, 5, 5, -1, -1};
    s.segments = segment_runs(s.column_class);
    return s;
}

TEST(ReferenceCsv, OneRow) {
    const auto pts = parse_reference_csv("point_id,x,y,distance_m\nP1,3,11,250.5\n");
    ASSERT_EQ(pts.size(), 1u);
    EXPECT_EQ(pts[0].point_id, "P1");
    EXPECT_EQ(pts[0].x, 3);
    EXPECT_EQ(pts[0].y, 11.0);
    EXPECT_EQ(pts[0].distance_m, 250.5);
}

TEST(ReferenceCsv, ColumnOrderAndBlankY) {
    const auto pts = parse_reference_csv("distance_m,point_id,y,x\n40,img#2,,7\n");
    ASSERT_EQ(pts.size(), 1u);
    EXPECT_EQ(pts[0].x, 7);
    EXPECT_FALSE(pts[0].y.has_value());
    EXPECT_EQ(pts[0].image_key(), "img");
}

TEST(ReferenceCsv, Errors) {
    EXPECT_THROW(parse_reference_csv("point_id,x,y,distance_m\nP1,3,11,0\n"), ParseError);
    EXPECT_THROW(parse_reference_csv("point_id,x,y,distance_m\nP1,3,11,-4\n"), ParseError);
    EXPECT_THROW(parse_reference_csv("point_id,x,distance_m\nP1,3,4\n"), ParseError);
    EXPECT_THROW(parse_reference_csv("point_id,x,y,distance_m\nP1,three,11,4\n"), ParseError);
    EXPECT_THROW(parse_reference_csv("point_id,x,y,distance_m\nP1,3,11,far\n"), ParseError);
    EXPECT_THROW(parse_reference_csv("point_id,x,y,distance_m\nP1,3,11,4\nP1,4,11,5\n"), ParseError);
    EXPECT_THROW(parse_reference_csv("point_id,x,y,distance_m\nP1,3,11\n"), ParseError);
    EXPECT_THROW(parse_reference_csv(""), ParseError);
}

TEST(ReferenceCsv, RoundTrip) {
    const std::string text = "point_id,x,y,distance_m\nA#0,3,11,250.5\nA#1,0,,12\n";
    EXPECT_EQ(reference_to_csv(parse_reference_csv(text)), text);
}

TEST(JoinPoints, NegativeColumnParsesThenFlagsAtJoin) {
    const auto pts = parse_reference_csv("point_id,x,y,distance_m\na,1,,10\nb,-1,,20\nc,2,,30\n");
    ASSERT_EQ(pts.size(), 3u);
    const auto joined = join_points(pts, small_skyline(), test_groups());
    ASSERT_EQ(joined.size(), 3u);
    EXPECT_TRUE(joined[0].usable());
    EXPECT_EQ(joined[1].status, JoinStatus::OutOfRange);
    EXPECT_FALSE(joined[1].context.has_value());
    EXPECT_TRUE(joined[2].usable());
}

TEST(JoinPoints, TreeContextSkyFlagAndMismatch) {
    std::vector<ReferencePoint> pts{{"t", 2, 14.0, 50.0}, {"s", 5, std::nullopt, 60.0}, {"w", 9, std::nullopt, 5.0}};
    const auto joined = join_points(pts, small_skyline(), test_groups());
    EXPECT_EQ(joined[0].context->group, Group::Trees);
    EXPECT_EQ(joined[0].context->start, 0);
    EXPECT_EQ(joined[0].context->width, 4);
    EXPECT_EQ(joined[0].y_skyline, 11);
    EXPECT_EQ(joined[0].y_mismatch, 3.0);
    EXPECT_EQ(joined[1].status, JoinStatus::SkyColumn);
    EXPECT_FALSE(joined[1].usable());
    EXPECT_EQ(joined[2].status, JoinStatus::OutOfRange);

    const auto csv = joined_to_csv(joined);
    EXPECT_EQ(csv,
              "point_id,x,y_skyline,group,x_c,D,distance_m,flags\n"
              "t,2,11,Trees,0,4,50,y_mismatch=3\n"
              "s,5,0,Sky,4,2,60,sky_column\n"
              "w,9,,,,,5,out_of_range\n");
}

TEST(JoinPoints, TotalDeterministicAndOrderPreserving) {
    std::vector<ReferencePoint> pts;
    for (int i = -3; i < 10; ++i) pts.push_back({"p" + std::to_string(i + 3), i, std::nullopt, 1.0 + i * i});
    const auto a = join_points(pts, small_skyline(), test_groups());
    const auto b = join_points(pts, small_skyline(), test_groups());
    ASSERT_EQ(a.size(), pts.size());
    std::size_t usable = 0, flagged = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].point, pts[i]);
        EXPECT_EQ(a[i].status, b[i].status);
        (a[i].usable() ? usable : flagged)++;
    }
    EXPECT_EQ(usable + flagged, pts.size());
    EXPECT_EQ(usable, 4u);
}

}  // namespace
}  // namespace skydist
