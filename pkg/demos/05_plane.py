"""Integrals over the whole plane via growing regions.

The tail is read off on several region shapes; a value is reported only when
they agree. sin(x^2 + y^2) needs a smoothed kernel, and a constant never settles.
"""

from zintegral import plane2d

circle, square, shifted = plane2d.circle_family(), plane2d.square_family(), plane2d.offset_circle_family(1.0, 0.0)

res = plane2d.evaluate2d(plane2d.gaussian2d(), plane2d.point_kernel(), [circle, square])
print(f"exp(-r^2): {res.value:.10f} on {', '.join(res.families_tested)}")

for label, kernel in [("point kernel", plane2d.point_kernel()), ("disk(2) kernel", plane2d.disk_kernel(2.0))]:
    res = plane2d.evaluate2d(plane2d.sin_r2(), kernel, [circle, shifted], plane2d.default_policy2d(1e-2))
    print(f"sin(r^2), {label}: status {res.status}, value {res.value}")

res = plane2d.evaluate2d(plane2d.constant2d(), plane2d.point_kernel(), [circle, square])
print(f"constant: status {res.status}")
