// World-to-screen mapping. World coordinates are meters with y up; the
// canvas is pixels with y down. One uniform scale for both axes so circles
// stay circles.

export interface Viewport {
  scale: number; // pixels per meter
  offsetX: number;
  offsetY: number;
  worldW: number;
  worldH: number;
}

export function fitViewport(
  worldW: number,
  worldH: number,
  canvasW: number,
  canvasH: number,
  marginPx = 20,
): Viewport {
  const scale = Math.min(
    (canvasW - 2 * marginPx) / worldW,
    (canvasH - 2 * marginPx) / worldH,
  );
  // center the domain in whichever direction has slack
  const offsetX = (canvasW - worldW * scale) / 2;
  const offsetY = (canvasH - worldH * scale) / 2;
  return { scale, offsetX, offsetY, worldW, worldH };
}

export function toScreen(vp: Viewport, x: number, y: number): [number, number] {
  return [vp.offsetX + x * vp.scale, vp.offsetY + (vp.worldH - y) * vp.scale];
}

export function toWorld(vp: Viewport, px: number, py: number): [number, number] {
  return [(px - vp.offsetX) / vp.scale, vp.worldH - (py - vp.offsetY) / vp.scale];
}

export function lengthToPx(vp: Viewport, meters: number): number {
  return meters * vp.scale;
}
