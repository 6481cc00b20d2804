/** Per-viewport request token gate plus trailing-edge debounce.
 *
 * Slider drags issue many updates; only the latest request may paint, and at
 * most one request is in flight per key at a time.
 */

export class LatestGate {
  private tokens = new Map<string, number>();

  next(key: string): number {
    const t = (this.tokens.get(key) ?? 0) + 1;
    this.tokens.set(key, t);
    return t;
  }

  isCurrent(key: string, token: number): boolean {
    return this.tokens.get(key) === token;
  }
}

type Task = () => Promise<void>;

export class Debouncer {
  private timers = new Map<string, ReturnType<typeof setTimeout>>();
  private running = new Map<string, boolean>();
  private pending = new Map<string, Task>();

  constructor(private delayMs: number = 120) {}

  /** Schedule the latest task for ``key``; earlier unstarted ones are dropped. */
  schedule(key: string, task: Task): void {
    const existing = this.timers.get(key);
    if (existing !== undefined) {
      clearTimeout(existing);
    }
    this.timers.set(
      key,
      setTimeout(() => {
        this.timers.delete(key);
        void this.run(key, task);
      }, this.delayMs),
    );
  }

  private async run(key: string, task: Task): Promise<void> {
    if (this.running.get(key)) {
      this.pending.set(key, task); // one in flight: queue the newest only
      return;
    }
    this.running.set(key, true);
    try {
      await task();
    } finally {
      this.running.set(key, false);
      const queued = this.pending.get(key);
      if (queued) {
        this.pending.delete(key);
        void this.run(key, queued);
      }
    }
  }
}
