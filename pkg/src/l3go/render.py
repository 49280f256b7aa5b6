"""Deterministic turntable rendering of scenes.

A tiny software rasterizer: orthographic camera circling the scene at a
fixed elevation, z-buffered flat shading lit from the camera, light-gray
object on a black background.  PNG encoding is done in-process (fixed
filter, fixed zlib settings) so identical scenes yield identical bytes.
"""

import io
import math
import struct
import zlib
from dataclasses import dataclass

import numpy as np

from .blenv import SceneState
from .geometry import Aabb, DEFAULT_TESSELLATION, Tessellation, generate_primitive


class RenderError(Exception):
    pass


class EmptySceneError(RenderError):
    pass


class EmptyInputError(RenderError):
    pass


@dataclass(frozen=True)
class CameraRig:
    """Turntable: n views at equal azimuth steps, fixed elevation, orthographic."""

    n_views: int = 10
    elevation_deg: float = 30.0
    frame_margin: float = 1.2
    resolution: int = 512

    def __post_init__(self):
        if self.n_views < 1:
            raise ValueError("n_views must be >= 1")
        if self.resolution < 8:
            raise ValueError("resolution must be >= 8")

    def azimuths(self) -> list[float]:
        return [k * 360.0 / self.n_views for k in range(self.n_views)]


def _camera_basis(azimuth_deg: float, elevation_deg: float):
    az = math.radians(azimuth_deg)
    el = math.radians(elevation_deg)
    # Unit vector from scene center toward the camera.
    to_cam = np.array([math.cos(el) * math.cos(az),
                       math.cos(el) * math.sin(az),
                       math.sin(el)])
    forward = -to_cam
    up = np.array([0.0, 0.0, 1.0])
    right = np.cross(forward, up)
    right /= np.linalg.norm(right)
    true_up = np.cross(right, forward)
    return right, true_up, forward, to_cam


def _scene_geometry(scene: SceneState, tess: Tessellation):
    """All triangles of the scene as one vertex/index pair, plus the frame box."""
    verts = []
    tris = []
    offset = 0
    box: Aabb | None = None
    for part in scene.parts:
        mesh = generate_primitive(part.spec, tess)
        verts.extend(v.as_tuple() for v in mesh.vertices)
        tris.extend((a + offset, b + offset, c + offset)
                    for a, b, c in mesh.triangles)
        offset += len(mesh.vertices)
        box = part.aabb if box is None else box.union(part.aabb)
    return np.asarray(verts, dtype=np.float64), np.asarray(tris, dtype=np.int64), box


def render_view(vertices: np.ndarray, triangles: np.ndarray, center: np.ndarray,
                frame_side: float, azimuth_deg: float, elevation_deg: float,
                resolution: int) -> np.ndarray:
    """Rasterize one orthographic view into an 8-bit grayscale image."""
    right, true_up, forward, to_cam = _camera_basis(azimuth_deg, elevation_deg)
    rel = vertices - center
    sx = rel @ right
    sy = rel @ true_up
    depth = rel @ forward  # smaller = closer to the camera

    scale = resolution / frame_side
    px = (sx * scale) + resolution / 2.0
    py = (-sy * scale) + resolution / 2.0

    image = np.zeros((resolution, resolution), dtype=np.uint8)
    zbuf = np.full((resolution, resolution), np.inf, dtype=np.float64)

    v0, v1, v2 = triangles[:, 0], triangles[:, 1], triangles[:, 2]
    e1 = vertices[v1] - vertices[v0]
    e2 = vertices[v2] - vertices[v0]
    normals = np.cross(e1, e2)
    lengths = np.linalg.norm(normals, axis=1)
    # Headlight shading, winding-independent.
    with np.errstate(invalid="ignore", divide="ignore"):
        lambert = np.abs(normals @ to_cam) / np.where(lengths > 0, lengths, 1.0)
    shades = np.where(lengths > 0, 55.0 + 200.0 * lambert, 0.0).astype(np.uint8)

    for t in range(len(triangles)):
        if lengths[t] == 0.0:
            continue
        idx = triangles[t]
        xs, ys, zs = px[idx], py[idx], depth[idx]
        x_min = max(int(math.floor(xs.min())), 0)
        x_max = min(int(math.ceil(xs.max())), resolution - 1)
        y_min = max(int(math.floor(ys.min())), 0)
        y_max = min(int(math.ceil(ys.max())), resolution - 1)
        if x_min > x_max or y_min > y_max:
            continue
        # Edge functions on the pixel-center grid (broadcast row x column).
        gx = (np.arange(x_min, x_max + 1) + 0.5)[None, :]
        gy = (np.arange(y_min, y_max + 1) + 0.5)[:, None]
        x0, y0 = xs[0], ys[0]
        x1, y1 = xs[1], ys[1]
        x2, y2 = xs[2], ys[2]
        area = (x1 - x0) * (y2 - y0) - (y1 - y0) * (x2 - x0)
        if area == 0.0:
            continue
        w0 = ((x2 - x1) * (gy - y1) - (y2 - y1) * (gx - x1)) / area
        w1 = ((x0 - x2) * (gy - y2) - (y0 - y2) * (gx - x2)) / area
        w2 = 1.0 - w0 - w1
        mask = (w0 >= 0) & (w1 >= 0) & (w2 >= -1e-12)
        if not mask.any():
            continue
        z = w0 * zs[0] + w1 * zs[1] + w2 * zs[2]
        window = zbuf[y_min:y_max + 1, x_min:x_max + 1]
        closer = mask & (z < window)
        window[closer] = z[closer]
        image[y_min:y_max + 1, x_min:x_max + 1][closer] = shades[t]
    return image


def render_turntable(scene: SceneState, rig: CameraRig = CameraRig(),
                     tess: Tessellation = DEFAULT_TESSELLATION) -> list[np.ndarray]:
    """Render n_views grayscale images circling the scene."""
    if not scene.parts:
        raise EmptySceneError("cannot render an empty scene")
    vertices, triangles, box = _scene_geometry(scene, tess)
    size = box.size
    max_extent = max(size.x, size.y, size.z)
    if max_extent == 0.0:
        max_extent = 1.0
    frame_side = rig.frame_margin * max_extent
    center = np.array(box.center.as_tuple())
    return [render_view(vertices, triangles, center, frame_side, az,
                        rig.elevation_deg, rig.resolution)
            for az in rig.azimuths()]


def encode_png(image: np.ndarray) -> bytes:
    """8-bit grayscale PNG with fixed settings; byte-stable for equal pixels."""
    if image.ndim != 2 or image.dtype != np.uint8:
        raise RenderError("expected a 2-D uint8 image")
    height, width = image.shape

    def chunk(tag: bytes, payload: bytes) -> bytes:
        return (struct.pack(">I", len(payload)) + tag + payload
                + struct.pack(">I", zlib.crc32(tag + payload) & 0xFFFFFFFF))

    header = struct.pack(">IIBBBBB", width, height, 8, 0, 0, 0, 0)
    raw = b"".join(b"\x00" + row.tobytes() for row in image)
    return (b"\x89PNG\r\n\x1a\n"
            + chunk(b"IHDR", header)
            + chunk(b"IDAT", zlib.compress(raw, 9))
            + chunk(b"IEND", b""))


def make_contact_sheet(images: list[np.ndarray], columns: int = 5) -> np.ndarray:
    """Tile views into a grid (2 x 5 for the default ten-view turntable)."""
    if not images:
        raise EmptyInputError("no images")
    cols = min(columns, len(images))
    rows = math.ceil(len(images) / cols)
    h, w = images[0].shape
    sheet = np.zeros((rows * h, cols * w), dtype=np.uint8)
    for i, img in enumerate(images):
        r, c = divmod(i, cols)
        sheet[r * h:(r + 1) * h, c * w:(c + 1) * w] = img
    return sheet


def make_gif(images: list[np.ndarray], fps: int = 5) -> bytes:
    """Animated GIF cycling the views in order."""
    if not images:
        raise EmptyInputError("no images")
    from PIL import Image

    frames = [Image.fromarray(img, mode="L") for img in images]
    buf = io.BytesIO()
    frames[0].save(buf, format="GIF", save_all=True, append_images=frames[1:],
                   duration=int(1000 / fps), loop=0)
    return buf.getvalue()


def lit_pixel_count(image: np.ndarray) -> int:
    return int((image > 0).sum())
