/**
 * Dashboard state store: holds the last authoritative snapshot, folds
 * live stream messages into it, and tracks connection health so the
 * view can flag stale data (older than 5 s) and retry with backoff.
 * Pure logic, no DOM.
 */

import type { SensorReading, Setting, StateSnapshot, StreamMessage } from "./api.js";
import { SETTINGS } from "./ballot.js";

export const STALE_AFTER_MS = 5_000;
export const BACKOFF_BASE_MS = 1_000;
export const BACKOFF_CAP_MS = 15_000;

export type ConnectionStatus = "connecting" | "live" | "polling" | "down";

export interface Notice {
  kind: string;
  text: string;
}

function settingByIndex(index: number): Setting {
  const s = SETTINGS[index];
  return s
    ? { index: s.index, label: s.label, level_percent: s.level_percent }
    : { index, label: `#${index}`, level_percent: 0 };
}

export class DashboardStore {
  state: StateSnapshot | null = null;
  status: ConnectionStatus = "connecting";
  notices: Notice[] = [];
  private lastUpdate: number | null = null;
  private attempts = 0;

  constructor(private nowFn: () => number = () => Date.now()) {}

  applySnapshot(snapshot: StateSnapshot): void {
    this.state = snapshot;
    this.lastUpdate = this.nowFn();
  }

  /** Fold one stream message; returns true when anything changed. */
  applyMessage(msg: StreamMessage): boolean {
    if (msg.type === "state" && msg.state) {
      this.applySnapshot(msg.state as unknown as StateSnapshot);
      return true;
    }
    if (this.state === null) return false;
    switch (msg.type) {
      case "setting": {
        this.state.setting = settingByIndex(msg.outcome as number);
        this.state.actuator = {
          ...this.state.actuator,
          seq: msg.seq as number,
          level_percent: msg.level_percent as number,
        };
        break;
      }
      case "sensor": {
        this.state.latest_sensor = msg as unknown as SensorReading;
        break;
      }
      case "event": {
        const event = msg.event as { kind: string; user_id?: string };
        const user = event.user_id;
        if (event.kind === "login" && user && !this.state.occupants.includes(user)) {
          this.state.occupants = [...this.state.occupants, user].sort();
        } else if (event.kind === "logout" && user) {
          this.state.occupants = this.state.occupants.filter((u) => u !== user);
        }
        break;
      }
      case "lottery": {
        const winners = (msg.winners as string[]) ?? [];
        this.notices.push({
          kind: "lottery",
          text: `Lottery drawn! Winners: ${winners.join(", ")}`,
        });
        break;
      }
      case "communal_lunch": {
        this.notices.push({
          kind: "communal_lunch",
          text: "Communal threshold reached: catered lunch unlocked!",
        });
        break;
      }
      case "survey_bonus":
        break; // points refresh with the next state push
      default:
        return false;
    }
    this.lastUpdate = this.nowFn();
    return true;
  }

  isStale(): boolean {
    return this.lastUpdate === null || this.nowFn() - this.lastUpdate > STALE_AFTER_MS;
  }

  ageMs(): number {
    return this.lastUpdate === null ? Number.POSITIVE_INFINITY : this.nowFn() - this.lastUpdate;
  }

  noteConnected(): void {
    this.status = "live";
    this.attempts = 0;
  }

  notePolling(): void {
    if (this.status !== "down") this.status = "polling";
  }

  noteDisconnect(): void {
    this.status = "down";
    this.attempts += 1;
  }

  /** Exponential backoff, capped, for stream reconnection attempts. */
  backoffMs(): number {
    const exp = BACKOFF_BASE_MS * 2 ** Math.max(0, this.attempts - 1);
    return Math.min(BACKOFF_CAP_MS, exp);
  }

  takeNotices(): Notice[] {
    const out = this.notices;
    this.notices = [];
    return out;
  }
}

/** Whole points for display: milli-points rounded down. */
export function wholePoints(milli: number): number {
  return Math.floor(milli / 1000);
}
