/** Client-to-server clock alignment from ping/pong round trips.
 *
 * Each pong carries the server's session time and echoes the client time
 * the ping was sent at; assuming a symmetric path, the offset estimate is
 * serverT - midpoint(clientSent, clientReceived).  The median over a
 * sliding window rejects delay spikes.
 */

const WINDOW = 15;

export class ClockSync {
  private samples: number[] = [];

  addSample(clientSent: number, serverTime: number, clientReceived: number): void {
    const midpoint = (clientSent + clientReceived) / 2;
    this.samples.push(serverTime - midpoint);
    if (this.samples.length > WINDOW) this.samples.shift();
  }

  get ready(): boolean {
    return this.samples.length > 0;
  }

  /** Current offset estimate (server session time minus client time). */
  get offset(): number {
    if (this.samples.length === 0) return 0;
    const sorted = [...this.samples].sort((a, b) => a - b);
    const mid = Math.floor(sorted.length / 2);
    return sorted.length % 2 ? sorted[mid] : (sorted[mid - 1] + sorted[mid]) / 2;
  }

  /** Map a client timestamp onto the server's session clock. */
  toServerTime(clientTime: number): number {
    return clientTime + this.offset;
  }
}
