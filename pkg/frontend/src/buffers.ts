/** Time-windowed event storage so long sessions never grow unbounded. */

export interface TimedEvent {
  t: number;
}

export class EventWindow<T extends TimedEvent> {
  private events: T[] = [];

  constructor(
    private readonly horizonSeconds: number,
    private readonly hardLimit = 10_000,
  ) {}

  push(event: T): void {
    this.events.push(event);
    if (this.events.length > this.hardLimit) {
      this.events.splice(0, this.events.length - this.hardLimit);
    }
  }

  /** Drop everything older than the horizon behind `now`. */
  evict(now: number): void {
    const cutoff = now - this.horizonSeconds;
    let keepFrom = 0;
    while (keepFrom < this.events.length && this.events[keepFrom].t < cutoff) {
      keepFrom += 1;
    }
    if (keepFrom > 0) this.events.splice(0, keepFrom);
  }

  visible(from: number, to: number): T[] {
    return this.events.filter((e) => e.t >= from && e.t <= to);
  }

  get length(): number {
    return this.events.length;
  }

  get all(): readonly T[] {
    return this.events;
  }
}
