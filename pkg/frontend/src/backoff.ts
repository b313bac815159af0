/** Exponential backoff: 1 s doubling per consecutive failure, capped at 30 s. */

export class Backoff {
  private attempt = 0;

  constructor(
    readonly baseMs = 1000,
    readonly capMs = 30000,
  ) {}

  /** Delay to wait before the next attempt, advancing the schedule. */
  nextDelay(): number {
    const delay = Math.min(this.baseMs * 2 ** this.attempt, this.capMs);
    this.attempt += 1;
    return delay;
  }

  /** Call on success so the next failure starts over at the base delay. */
  reset(): void {
    this.attempt = 0;
  }

  get attempts(): number {
    return this.attempt;
  }
}
