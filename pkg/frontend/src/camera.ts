// World <-> screen transforms with clamped zoom and a fixed-duration
// animated fly-to used by "zoom to node".

export interface CameraSnapshot {
  cx: number;
  cy: number;
  zoom: number; // pixels per world unit
}

export const ZOOM_MIN = 0.05;
export const ZOOM_MAX = 400;
export const FLY_MS = 400;

function easeInOut(t: number): number {
  return t < 0.5 ? 2 * t * t : 1 - (-2 * t + 2) ** 2 / 2;
}

export class Camera {
  cx = 0;
  cy = 0;
  zoom = 1;
  private flight: {
    from: CameraSnapshot;
    to: CameraSnapshot;
    start: number;
    duration: number;
  } | null = null;

  constructor(snapshot?: Partial<CameraSnapshot>) {
    Object.assign(this, snapshot);
    this.zoom = clampZoom(this.zoom);
  }

  snapshot(): CameraSnapshot {
    return { cx: this.cx, cy: this.cy, zoom: this.zoom };
  }

  worldToScreen(x: number, y: number, width: number, height: number): [number, number] {
    return [(x - this.cx) * this.zoom + width / 2, (y - this.cy) * -this.zoom + height / 2];
  }

  screenToWorld(px: number, py: number, width: number, height: number): [number, number] {
    return [(px - width / 2) / this.zoom + this.cx, (py - height / 2) / -this.zoom + this.cy];
  }

  visibleBounds(width: number, height: number): { x0: number; y0: number; x1: number; y1: number } {
    const hw = width / 2 / this.zoom;
    const hh = height / 2 / this.zoom;
    return { x0: this.cx - hw, y0: this.cy - hh, x1: this.cx + hw, y1: this.cy + hh };
  }

  panByPixels(dxPx: number, dyPx: number): void {
    this.cx -= dxPx / this.zoom;
    this.cy += dyPx / this.zoom;
    this.flight = null;
  }

  // zoom toward a screen anchor so the point under the cursor stays put
  zoomBy(factor: number, anchorPx: number, anchorPy: number, width: number, height: number): void {
    const [wx, wy] = this.screenToWorld(anchorPx, anchorPy, width, height);
    this.zoom = clampZoom(this.zoom * factor);
    const [nx, ny] = this.screenToWorld(anchorPx, anchorPy, width, height);
    this.cx += wx - nx;
    this.cy += wy - ny;
    this.flight = null;
  }

  flyTo(cx: number, cy: number, zoom: number, now: number, durationMs: number = FLY_MS): void {
    this.flight = {
      from: this.snapshot(),
      to: { cx, cy, zoom: clampZoom(zoom) },
      start: now,
      duration: durationMs,
    };
  }

  get flying(): boolean {
    return this.flight !== null;
  }

  /** Advance any active flight; returns true while animating. */
  tick(now: number): boolean {
    if (!this.flight) return false;
    const { from, to, start, duration } = this.flight;
    const t = Math.min(1, (now - start) / duration);
    const k = easeInOut(t);
    this.cx = from.cx + (to.cx - from.cx) * k;
    this.cy = from.cy + (to.cy - from.cy) * k;
    // interpolate zoom geometrically so the motion feels uniform
    this.zoom = clampZoom(from.zoom * (to.zoom / from.zoom) ** k);
    if (t >= 1) {
      this.flight = null;
      return false;
    }
    return true;
  }

  fitBounds(x0: number, y0: number, x1: number, y1: number, width: number, height: number, pad = 1.1): void {
    this.cx = (x0 + x1) / 2;
    this.cy = (y0 + y1) / 2;
    const spanX = Math.max(x1 - x0, 1e-9) * pad;
    const spanY = Math.max(y1 - y0, 1e-9) * pad;
    this.zoom = clampZoom(Math.min(width / spanX, height / spanY));
    this.flight = null;
  }
}

export function clampZoom(zoom: number): number {
  return Math.min(ZOOM_MAX, Math.max(ZOOM_MIN, zoom));
}
