// Drag throttling: while the pointer is down we forward at most one
// position per interval, always the newest one, and flush the final
// position on release so the last drag point is never lost.

export type EmitPosition = (lat: number, lon: number) => void;

export class DragThrottle {
  private active = false;
  private lastEmitMs = -Infinity;
  private pending: { lat: number; lon: number } | null = null;

  constructor(
    private readonly emit: EmitPosition,
    private readonly intervalMs = 200,
    private readonly now: () => number = () => Date.now(),
  ) {}

  get draggingNow(): boolean {
    return this.active;
  }

  start(lat: number, lon: number): void {
    this.active = true;
    this.pending = null;
    this.lastEmitMs = this.now();
    this.emit(lat, lon); // leading edge
  }

  move(lat: number, lon: number): void {
    if (!this.active) return;
    const t = this.now();
    if (t - this.lastEmitMs >= this.intervalMs) {
      this.lastEmitMs = t;
      this.pending = null;
      this.emit(lat, lon);
    } else {
      this.pending = { lat, lon };
    }
  }

  end(): void {
    if (!this.active) return;
    this.active = false;
    if (this.pending !== null) {
      this.emit(this.pending.lat, this.pending.lon); // last position wins
      this.pending = null;
    }
  }
}
