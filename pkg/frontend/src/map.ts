// Minimal equirectangular canvas map: draws circles in lat/lon space and
// reports clicks back as coordinates. No tiles, no projection library —
// the viewport is a plain bounding box.

export interface Viewport {
  minLat: number;
  maxLat: number;
  minLon: number;
  maxLon: number;
}

export interface Marker {
  lat: number;
  lon: number;
  radiusPx: number;
  color: string;
  alpha?: number;
  label?: string;
}

export class CanvasMap {
  private markers: Marker[] = [];
  private clickHandlers: Array<(lat: number, lon: number) => void> = [];
  private pin: { lat: number; lon: number } | null = null;

  constructor(private canvas: HTMLCanvasElement, public viewport: Viewport) {
    canvas.addEventListener("click", (event) => {
      const rect = canvas.getBoundingClientRect();
      const x = ((event.clientX - rect.left) / rect.width) * canvas.width;
      const y = ((event.clientY - rect.top) / rect.height) * canvas.height;
      const { lat, lon } = this.unproject(x, y);
      for (const handler of this.clickHandlers) handler(lat, lon);
    });
  }

  onClick(handler: (lat: number, lon: number) => void): void {
    this.clickHandlers.push(handler);
  }

  project(lat: number, lon: number): { x: number; y: number } {
    const { minLat, maxLat, minLon, maxLon } = this.viewport;
    const x = ((lon - minLon) / (maxLon - minLon)) * this.canvas.width;
    const y = (1 - (lat - minLat) / (maxLat - minLat)) * this.canvas.height;
    return { x, y };
  }

  unproject(x: number, y: number): { lat: number; lon: number } {
    const { minLat, maxLat, minLon, maxLon } = this.viewport;
    const lon = minLon + (x / this.canvas.width) * (maxLon - minLon);
    const lat = minLat + (1 - y / this.canvas.height) * (maxLat - minLat);
    return { lat, lon };
  }

  setMarkers(markers: Marker[]): void {
    this.markers = markers;
    this.draw();
  }

  setPin(lat: number, lon: number): void {
    this.pin = { lat, lon };
    this.draw();
  }

  draw(): void {
    const ctx = this.canvas.getContext("2d");
    if (!ctx) return;
    ctx.clearRect(0, 0, this.canvas.width, this.canvas.height);
    ctx.fillStyle = "#10151d";
    ctx.fillRect(0, 0, this.canvas.width, this.canvas.height);

    ctx.strokeStyle = "#26303d";
    ctx.lineWidth = 1;
    const latStep = (this.viewport.maxLat - this.viewport.minLat) / 6;
    const lonStep = (this.viewport.maxLon - this.viewport.minLon) / 6;
    for (let i = 1; i < 6; i++) {
      const { y } = this.project(this.viewport.minLat + i * latStep, this.viewport.minLon);
      ctx.beginPath();
      ctx.moveTo(0, y);
      ctx.lineTo(this.canvas.width, y);
      ctx.stroke();
      const { x } = this.project(this.viewport.minLat, this.viewport.minLon + i * lonStep);
      ctx.beginPath();
      ctx.moveTo(x, 0);
      ctx.lineTo(x, this.canvas.height);
      ctx.stroke();
    }

    for (const marker of this.markers) {
      const { x, y } = this.project(marker.lat, marker.lon);
      ctx.globalAlpha = marker.alpha ?? 0.75;
      ctx.fillStyle = marker.color;
      ctx.beginPath();
      ctx.arc(x, y, marker.radiusPx, 0, Math.PI * 2);
      ctx.fill();
      ctx.globalAlpha = 1;
      if (marker.label) {
        ctx.fillStyle = "#dce3ec";
        ctx.font = "11px system-ui";
        ctx.fillText(marker.label, x + marker.radiusPx + 3, y + 3);
      }
    }

    if (this.pin) {
      const { x, y } = this.project(this.pin.lat, this.pin.lon);
      ctx.strokeStyle = "#69b7ff";
      ctx.lineWidth = 2;
      ctx.beginPath();
      ctx.moveTo(x - 7, y);
      ctx.lineTo(x + 7, y);
      ctx.moveTo(x, y - 7);
      ctx.lineTo(x, y + 7);
      ctx.stroke();
    }
  }
}

/** Pixel radius for a hotspot's display radius in meters, viewport-scaled. */
export function metersToPixels(radiusM: number, map: CanvasMap, canvasWidth: number): number {
  const lonSpanM = (map.viewport.maxLon - map.viewport.minLon) * 85000; // ~mid-latitude
  return Math.max(3, (radiusM / lonSpanM) * canvasWidth);
}
