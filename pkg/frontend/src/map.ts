/** Canvas map: occupancy grid, rooms, robots, humans, objects, markers. */
import type { SessionStore } from "./store.js";

const COLORS = {
  free: "#10141c",
  wall: "#3c4354",
  furniture: "#2a3140",
  roomLine: "#1f2737",
  ugv: "#53d18a",
  drone: "#5aa7f0",
  human: "#e8c268",
  object: "#e06c75",
  marker: "#f5e050",
  text: "#9aa4b5",
};

export class MapView {
  private ctx: CanvasRenderingContext2D;

  constructor(private readonly canvas: HTMLCanvasElement, private readonly store: SessionStore) {
    const ctx = canvas.getContext("2d");
    if (!ctx) throw new Error("canvas 2d context unavailable");
    this.ctx = ctx;
  }

  render(): void {
    const snapshot = this.store.snapshot;
    const { ctx, canvas } = this;
    ctx.fillStyle = COLORS.free;
    ctx.fillRect(0, 0, canvas.width, canvas.height);
    if (!snapshot) return;

    const widthM = snapshot.map.width * snapshot.map.cell_size;
    const heightM = snapshot.map.height * snapshot.map.cell_size;
    const scale = Math.min(canvas.width / widthM, canvas.height / heightM);
    const toX = (x: number) => x * scale;
    const toY = (y: number) => canvas.height - y * scale; // world y grows upward

    const cs = snapshot.map.cell_size;
    snapshot.map.rows.forEach((row, cy) => {
      for (let cx = 0; cx < row.length; cx++) {
        const ch = row[cx];
        if (ch === ".") continue;
        ctx.fillStyle = ch === "#" ? COLORS.wall : COLORS.furniture;
        ctx.fillRect(toX(cx * cs), toY((cy + 1) * cs), cs * scale + 0.5, cs * scale + 0.5);
      }
    });

    ctx.strokeStyle = COLORS.roomLine;
    ctx.setLineDash([4, 4]);
    ctx.font = "11px system-ui";
    for (const [name, rect] of Object.entries(snapshot.rooms)) {
      const [x0, y0, x1, y1] = rect;
      ctx.strokeRect(toX(x0), toY(y1), (x1 - x0) * scale, (y1 - y0) * scale);
      ctx.fillStyle = COLORS.text;
      ctx.fillText(name, toX(x0) + 5, toY(y1) + 13);
    }
    ctx.setLineDash([]);

    for (const marker of this.store.markers.values()) {
      ctx.fillStyle = COLORS.marker;
      ctx.beginPath();
      ctx.arc(toX(marker.x), toY(marker.y), 6, 0, Math.PI * 2);
      ctx.fill();
      ctx.fillStyle = COLORS.text;
      ctx.fillText(marker.concept.toLowerCase(), toX(marker.x) + 8, toY(marker.y) + 4);
    }

    for (const object of snapshot.objects) {
      if (object.held_by) continue;
      ctx.fillStyle = COLORS.object;
      ctx.beginPath();
      ctx.arc(toX(object.x), toY(object.y), 4, 0, Math.PI * 2);
      ctx.fill();
    }

    for (const human of snapshot.humans) {
      ctx.fillStyle = COLORS.human;
      ctx.beginPath();
      ctx.arc(toX(human.x), toY(human.y), 7, 0, Math.PI * 2);
      ctx.fill();
      ctx.fillStyle = COLORS.text;
      ctx.fillText(human.agent_id, toX(human.x) + 9, toY(human.y) + 4);
    }

    for (const robot of snapshot.robots) {
      const isDrone = (robot.kind ?? "").toLowerCase() === "drone";
      ctx.fillStyle = isDrone ? COLORS.drone : COLORS.ugv;
      const px = toX(robot.x);
      const py = toY(robot.y);
      ctx.beginPath();
      ctx.arc(px, py, isDrone ? 7 : 8, 0, Math.PI * 2);
      ctx.fill();
      const heading = robot.heading ?? 0;
      ctx.strokeStyle = "#0b0e14";
      ctx.lineWidth = 2;
      ctx.beginPath();
      ctx.moveTo(px, py);
      ctx.lineTo(px + 12 * Math.cos(heading), py - 12 * Math.sin(heading));
      ctx.stroke();
      ctx.fillStyle = COLORS.text;
      const battery = robot.battery !== undefined ? ` ${(robot.battery * 100).toFixed(0)}%` : "";
      ctx.fillText(`${robot.robot_id}${battery}`, px + 10, py - 8);
    }
  }
}
