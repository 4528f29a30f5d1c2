#pragma once

#include "headscan/geometry.h"

namespace headscan::scene {

TriangleMesh make_uv_sphere(const Vec3& center, double radius, int rings = 48, int segments = 96);
TriangleMesh make_box(const Vec3& lo, const Vec3& hi);
// Closed cylinder along +z starting at base_center.
TriangleMesh make_cylinder(const Vec3& base_center, double radius, double height, int segments = 96);

struct HeadShape {
    Vec3 center{0.0, 0.0, 0.09};   // center of the skull ellipsoid
    Vec3 semi_axes{0.075, 0.095, 0.11};  // width, depth (face toward +y), height
    // Faces below this height are flattened onto a base plane; -inf keeps the head closed.
    double base_z = 0.0;
    int rings = 120;
    int segments = 240;
};

// Star-shaped synthetic head: skull ellipsoid with nose, ears, brow, chin and eye sockets.
TriangleMesh make_head(const HeadShape& shape = {});

struct Scene {
    TriangleMesh mesh;          // everything the scanner sees
    TriangleMesh ground_truth;  // the object evaluated against
    Vec3 focus = Vec3::Zero();  // point the scan trajectory orbits
};

// Head resting on a 1.2 m square table whose top is the plane z = 0. The ground truth omits
// the head's flat base, which touches the table and cannot be observed.
Scene head_on_table();
// Head sphere on a neck and torso cylinder, standing upright with no support plane.
Scene human_bust();
// Sphere beside a box on a table; a small tracking scene.
Scene sphere_and_box();

}  // namespace headscan::scene
