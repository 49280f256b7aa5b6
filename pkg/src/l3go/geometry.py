"""Primitive meshes and exact bounding boxes.

Five parametric solids (cube, cylinder, cone, sphere, torus) are tessellated
into closed triangle meshes and described by exact analytic axis-aligned
bounding boxes.  Coordinates are Z-up, right-handed.  Scale is applied about
the primitive's own center, then the part is translated to its location.
"""

import math
from dataclasses import dataclass, field
from enum import Enum


class GeometryError(ValueError):
    """Base class for geometry errors."""


class InvalidSpecError(GeometryError):
    """A primitive spec violates an invariant; the message names the field."""


class EmptyMeshError(GeometryError):
    """Operation requires a mesh with at least one vertex."""


class DuplicateNameError(GeometryError):
    """Two parts share a name where uniqueness is required."""


def _require_finite(value: float, name: str) -> None:
    if not math.isfinite(value):
        raise InvalidSpecError(f"{name} must be finite, got {value!r}")


@dataclass(frozen=True)
class Vec3:
    """A point or extent in scene units."""

    x: float
    y: float
    z: float

    def __post_init__(self):
        for axis in ("x", "y", "z"):
            _require_finite(getattr(self, axis), axis)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.z)

    def __add__(self, other: "Vec3") -> "Vec3":
        return Vec3(self.x + other.x, self.y + other.y, self.z + other.z)

    def __sub__(self, other: "Vec3") -> "Vec3":
        return Vec3(self.x - other.x, self.y - other.y, self.z - other.z)

    def scaled(self, other: "Vec3") -> "Vec3":
        """Componentwise product."""
        return Vec3(self.x * other.x, self.y * other.y, self.z * other.z)


ORIGIN = Vec3(0.0, 0.0, 0.0)
UNIT_SCALE = Vec3(1.0, 1.0, 1.0)


class Kind(str, Enum):
    CUBE = "cube"
    CYLINDER = "cylinder"
    CONE = "cone"
    SPHERE = "sphere"
    TORUS = "torus"


# Required kind-specific parameter names, in canonical order.
KIND_PARAMS: dict[Kind, tuple[str, ...]] = {
    Kind.CUBE: (),
    Kind.CYLINDER: ("radius", "depth"),
    Kind.CONE: ("radius_bottom", "radius_top", "depth"),
    Kind.SPHERE: ("radius",),
    Kind.TORUS: ("major_radius", "minor_radius"),
}


@dataclass(frozen=True)
class PrimitiveSpec:
    """One create-part action: a primitive kind plus name, placement and size.

    The unit cube has edge 1 before scale; cylinders and cones run along +z
    with their depth centered on the location; the torus lies in the xy-plane.
    """

    kind: Kind
    name: str
    location: Vec3 = ORIGIN
    scale: Vec3 = UNIT_SCALE
    radius: float | None = None
    depth: float | None = None
    radius_bottom: float | None = None
    radius_top: float | None = None
    major_radius: float | None = None
    minor_radius: float | None = None

    def __post_init__(self):
        if not isinstance(self.kind, Kind):
            object.__setattr__(self, "kind", Kind(self.kind))
        if not self.name:
            raise InvalidSpecError("name must be nonempty")
        for axis in ("x", "y", "z"):
            if getattr(self.scale, axis) <= 0:
                raise InvalidSpecError(f"scale.{axis} must be > 0")
        required = KIND_PARAMS[self.kind]
        all_params = ("radius", "depth", "radius_bottom", "radius_top",
                      "major_radius", "minor_radius")
        for p in all_params:
            value = getattr(self, p)
            if p in required:
                if value is None:
                    raise InvalidSpecError(f"{p} is required for {self.kind.value}")
                _require_finite(value, p)
            elif value is not None:
                raise InvalidSpecError(f"{p} is not a parameter of {self.kind.value}")
        if self.kind is Kind.CYLINDER and self.radius <= 0:
            raise InvalidSpecError("radius must be > 0")
        if self.kind is Kind.SPHERE and self.radius <= 0:
            raise InvalidSpecError("radius must be > 0")
        if self.kind in (Kind.CYLINDER, Kind.CONE) and self.depth <= 0:
            raise InvalidSpecError("depth must be > 0")
        if self.kind is Kind.CONE:
            if self.radius_bottom <= 0:
                raise InvalidSpecError("radius_bottom must be > 0")
            if self.radius_top < 0:
                raise InvalidSpecError("radius_top must be >= 0")
        if self.kind is Kind.TORUS:
            if self.minor_radius <= 0:
                raise InvalidSpecError("minor_radius must be > 0")
            if self.minor_radius >= self.major_radius:
                raise InvalidSpecError("minor_radius must be < major_radius")

    def params(self) -> dict[str, float]:
        """Kind-specific parameters in canonical order."""
        return {p: getattr(self, p) for p in KIND_PARAMS[self.kind]}


def cube(name: str, location: Vec3 = ORIGIN, scale: Vec3 = UNIT_SCALE) -> PrimitiveSpec:
    return PrimitiveSpec(Kind.CUBE, name, location, scale)


def cylinder(name: str, radius: float, depth: float,
             location: Vec3 = ORIGIN, scale: Vec3 = UNIT_SCALE) -> PrimitiveSpec:
    return PrimitiveSpec(Kind.CYLINDER, name, location, scale, radius=radius, depth=depth)


def cone(name: str, radius_bottom: float, radius_top: float, depth: float,
         location: Vec3 = ORIGIN, scale: Vec3 = UNIT_SCALE) -> PrimitiveSpec:
    return PrimitiveSpec(Kind.CONE, name, location, scale,
                         radius_bottom=radius_bottom, radius_top=radius_top, depth=depth)


def sphere(name: str, radius: float,
           location: Vec3 = ORIGIN, scale: Vec3 = UNIT_SCALE) -> PrimitiveSpec:
    return PrimitiveSpec(Kind.SPHERE, name, location, scale, radius=radius)


def torus(name: str, major_radius: float, minor_radius: float,
          location: Vec3 = ORIGIN, scale: Vec3 = UNIT_SCALE) -> PrimitiveSpec:
    return PrimitiveSpec(Kind.TORUS, name, location, scale,
                         major_radius=major_radius, minor_radius=minor_radius)


@dataclass(frozen=True)
class Tessellation:
    """Mesh resolution: radial segments, plus latitude rings for spheres."""

    segments: int = 32
    rings: int = 16

    def __post_init__(self):
        if self.segments < 3:
            raise InvalidSpecError("segments must be >= 3")
        if self.rings < 2:
            raise InvalidSpecError("rings must be >= 2")


DEFAULT_TESSELLATION = Tessellation()


@dataclass(frozen=True)
class Mesh:
    """Indexed triangle mesh; triangle indices are 0-based."""

    vertices: tuple[Vec3, ...]
    triangles: tuple[tuple[int, int, int], ...]


@dataclass(frozen=True)
class Aabb:
    """Axis-aligned bounding box, min <= max componentwise."""

    min: Vec3
    max: Vec3

    def __post_init__(self):
        for axis in ("x", "y", "z"):
            if getattr(self.min, axis) > getattr(self.max, axis):
                raise GeometryError(f"aabb min.{axis} > max.{axis}")

    @property
    def size(self) -> Vec3:
        return self.max - self.min

    @property
    def center(self) -> Vec3:
        return Vec3((self.min.x + self.max.x) / 2.0,
                    (self.min.y + self.max.y) / 2.0,
                    (self.min.z + self.max.z) / 2.0)

    def contains(self, other: "Aabb", slack: float = 0.0) -> bool:
        """True if `other` lies inside this box, allowing `slack` overhang."""
        return (other.min.x >= self.min.x - slack and other.max.x <= self.max.x + slack
                and other.min.y >= self.min.y - slack and other.max.y <= self.max.y + slack
                and other.min.z >= self.min.z - slack and other.max.z <= self.max.z + slack)

    def union(self, other: "Aabb") -> "Aabb":
        return Aabb(
            Vec3(min(self.min.x, other.min.x), min(self.min.y, other.min.y),
                 min(self.min.z, other.min.z)),
            Vec3(max(self.max.x, other.max.x), max(self.max.y, other.max.y),
                 max(self.max.z, other.max.z)),
        )


def _place(points: list[tuple[float, float, float]], spec: PrimitiveSpec) -> tuple[Vec3, ...]:
    """Scale about the primitive's own center, then translate to location."""
    sx, sy, sz = spec.scale.as_tuple()
    lx, ly, lz = spec.location.as_tuple()
    return tuple(Vec3(x * sx + lx, y * sy + ly, z * sz + lz) for x, y, z in points)


def _ring(radius: float, z: float, segments: int) -> list[tuple[float, float, float]]:
    step = 2.0 * math.pi / segments
    return [(radius * math.cos(k * step), radius * math.sin(k * step), z)
            for k in range(segments)]


def _cube_mesh() -> tuple[list, list]:
    h = 0.5
    verts = [(-h, -h, -h), (h, -h, -h), (h, h, -h), (-h, h, -h),
             (-h, -h, h), (h, -h, h), (h, h, h), (-h, h, h)]
    tris = [(0, 3, 2), (0, 2, 1),   # bottom (-z)
            (4, 5, 6), (4, 6, 7),   # top (+z)
            (0, 1, 5), (0, 5, 4),   # front face at -y
            (2, 3, 7), (2, 7, 6),   # back face at +y
            (0, 4, 7), (0, 7, 3),   # -x
            (1, 2, 6), (1, 6, 5)]   # +x
    return verts, tris


def _tube_mesh(radius_bottom: float, radius_top: float, depth: float,
               segments: int) -> tuple[list, list]:
    """Capped tube: cylinder when radii equal, frustum otherwise."""
    n = segments
    h = depth / 2.0
    verts = _ring(radius_bottom, -h, n) + _ring(radius_top, h, n)
    verts.append((0.0, 0.0, -h))  # bottom center, index 2n
    verts.append((0.0, 0.0, h))   # top center, index 2n+1
    tris = []
    for k in range(n):
        k2 = (k + 1) % n
        tris.append((k, k2, n + k2))
        tris.append((k, n + k2, n + k))
    for k in range(n):
        k2 = (k + 1) % n
        tris.append((2 * n, k2, k))          # bottom cap faces -z
        tris.append((2 * n + 1, n + k, n + k2))  # top cap faces +z
    return verts, tris


def _cone_mesh(radius_bottom: float, depth: float, segments: int) -> tuple[list, list]:
    """True cone with an apex vertex (radius_top == 0)."""
    n = segments
    h = depth / 2.0
    verts = _ring(radius_bottom, -h, n)
    verts.append((0.0, 0.0, -h))  # bottom center, index n
    verts.append((0.0, 0.0, h))   # apex, index n+1
    tris = []
    for k in range(n):
        k2 = (k + 1) % n
        tris.append((k, k2, n + 1))  # side to apex
        tris.append((n, k2, k))      # bottom cap
    return verts, tris


def _sphere_mesh(radius: float, segments: int, rings: int) -> tuple[list, list]:
    """UV sphere: segments*(rings-1) + 2 vertices (poles included)."""
    n, r = segments, rings
    verts: list[tuple[float, float, float]] = [(0.0, 0.0, radius)]  # north pole
    for k in range(1, r):
        theta = math.pi * k / r
        verts.extend(_ring(radius * math.sin(theta), radius * math.cos(theta), n))
    verts.append((0.0, 0.0, -radius))  # south pole
    south = len(verts) - 1

    def ring_start(k: int) -> int:  # k in 1..r-1
        return 1 + (k - 1) * n

    tris = []
    top = ring_start(1)
    for j in range(n):
        j2 = (j + 1) % n
        tris.append((0, top + j, top + j2))
    for k in range(1, r - 1):
        a, b = ring_start(k), ring_start(k + 1)
        for j in range(n):
            j2 = (j + 1) % n
            tris.append((a + j, b + j, b + j2))
            tris.append((a + j, b + j2, a + j2))
    bottom = ring_start(r - 1)
    for j in range(n):
        j2 = (j + 1) % n
        tris.append((south, bottom + j2, bottom + j))
    return verts, tris


def _torus_mesh(major: float, minor: float, segments: int) -> tuple[list, list]:
    """Torus in the xy-plane; segments subdivide both loops."""
    n = segments
    verts = []
    for i in range(n):
        theta = 2.0 * math.pi * i / n
        ct, st = math.cos(theta), math.sin(theta)
        for j in range(n):
            phi = 2.0 * math.pi * j / n
            rad = major + minor * math.cos(phi)
            verts.append((rad * ct, rad * st, minor * math.sin(phi)))
    tris = []
    for i in range(n):
        i2 = (i + 1) % n
        for j in range(n):
            j2 = (j + 1) % n
            a = i * n + j
            b = i2 * n + j
            c = i2 * n + j2
            d = i * n + j2
            tris.append((a, b, c))
            tris.append((a, c, d))
    return verts, tris


def generate_primitive(spec: PrimitiveSpec,
                       tess: Tessellation = DEFAULT_TESSELLATION) -> Mesh:
    """Tessellate a primitive into a closed triangle mesh at its placement."""
    if spec.kind is Kind.CUBE:
        verts, tris = _cube_mesh()
    elif spec.kind is Kind.CYLINDER:
        verts, tris = _tube_mesh(spec.radius, spec.radius, spec.depth, tess.segments)
    elif spec.kind is Kind.CONE:
        if spec.radius_top == 0:
            verts, tris = _cone_mesh(spec.radius_bottom, spec.depth, tess.segments)
        else:
            verts, tris = _tube_mesh(spec.radius_bottom, spec.radius_top, spec.depth,
                                     tess.segments)
    elif spec.kind is Kind.SPHERE:
        verts, tris = _sphere_mesh(spec.radius, tess.segments, tess.rings)
    elif spec.kind is Kind.TORUS:
        verts, tris = _torus_mesh(spec.major_radius, spec.minor_radius, tess.segments)
    else:  # pragma: no cover - enum is exhaustive
        raise InvalidSpecError(f"unknown kind {spec.kind!r}")
    return Mesh(vertices=_place(verts, spec), triangles=tuple(tris))


def analytic_aabb(spec: PrimitiveSpec) -> Aabb:
    """Exact bounding box of the ideal (untessellated) solid."""
    if spec.kind is Kind.CUBE:
        ext = (0.5, 0.5, 0.5)
    elif spec.kind is Kind.CYLINDER:
        ext = (spec.radius, spec.radius, spec.depth / 2.0)
    elif spec.kind is Kind.CONE:
        r = max(spec.radius_bottom, spec.radius_top)
        ext = (r, r, spec.depth / 2.0)
    elif spec.kind is Kind.SPHERE:
        ext = (spec.radius, spec.radius, spec.radius)
    else:  # torus
        r = spec.major_radius + spec.minor_radius
        ext = (r, r, spec.minor_radius)
    sx, sy, sz = spec.scale.as_tuple()
    loc = spec.location
    half = Vec3(ext[0] * sx, ext[1] * sy, ext[2] * sz)
    return Aabb(loc - half, loc + half)


def mesh_aabb(mesh: Mesh) -> Aabb:
    """Componentwise min/max over vertices."""
    if not mesh.vertices:
        raise EmptyMeshError("mesh has no vertices")
    xs = [v.x for v in mesh.vertices]
    ys = [v.y for v in mesh.vertices]
    zs = [v.z for v in mesh.vertices]
    return Aabb(Vec3(min(xs), min(ys), min(zs)), Vec3(max(xs), max(ys), max(zs)))


def _fmt(value: float) -> str:
    return f"{value + 0.0:.6f}"


def export_obj(scene_meshes: list[tuple[str, Mesh]]) -> bytes:
    """Serialize named meshes as Wavefront OBJ (1-indexed faces, 6 decimals)."""
    seen: set[str] = set()
    lines: list[str] = []
    offset = 0
    for name, mesh in scene_meshes:
        if name in seen:
            raise DuplicateNameError(f"duplicate part name {name!r}")
        seen.add(name)
        lines.append(f"o {name}")
        for v in mesh.vertices:
            lines.append(f"v {_fmt(v.x)} {_fmt(v.y)} {_fmt(v.z)}")
        for a, b, c in mesh.triangles:
            lines.append(f"f {a + 1 + offset} {b + 1 + offset} {c + 1 + offset}")
        offset += len(mesh.vertices)
    text = "\n".join(lines)
    if lines:
        text += "\n"
    return text.encode("ascii")
