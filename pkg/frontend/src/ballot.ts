/**
 * Ballot form model, kept free of DOM concerns so it can be tested
 * headlessly.  The form always prompts exactly the two settings the
 * voter did not choose, clamps every pay value into [0, 100], and has
 * a one-click control that maxes both follow-up answers.
 */

import type { BallotWire } from "./api.js";

export const LAMBDA_MAX = 100;

export interface SettingOption {
  index: number;
  label: string;
  level_percent: number;
}

export const SETTINGS: SettingOption[] = [
  { index: 0, label: "Normal", level_percent: 33 },
  { index: 1, label: "Bright", level_percent: 67 },
  { index: 2, label: "VeryBright", level_percent: 100 },
];

export function clampPay(value: number): number {
  if (Number.isNaN(value)) return 0;
  return Math.min(LAMBDA_MAX, Math.max(0, Math.round(value)));
}

export class BallotForm {
  private preferredIndex: number;
  private pays: Map<number, number>;

  constructor(preferred = 0) {
    this.preferredIndex = preferred;
    this.pays = new Map(this.alternatives().map((alt) => [alt, 0]));
  }

  get preferred(): number {
    return this.preferredIndex;
  }

  /** The two settings that get willingness-to-pay follow-ups. */
  alternatives(): number[] {
    return SETTINGS.map((s) => s.index).filter((i) => i !== this.preferredIndex);
  }

  setPreferred(index: number): void {
    if (!SETTINGS.some((s) => s.index === index)) {
      throw new Error(`no setting with index ${index}`);
    }
    if (index === this.preferredIndex) return;
    const previous = this.pays;
    this.preferredIndex = index;
    // keep answers the voter already gave for settings still prompted
    this.pays = new Map(
      this.alternatives().map((alt) => [alt, previous.get(alt) ?? 0]),
    );
  }

  payFor(alt: number): number {
    const value = this.pays.get(alt);
    if (value === undefined) throw new Error(`setting ${alt} is not prompted`);
    return value;
  }

  setPay(alt: number, value: number): void {
    if (!this.pays.has(alt)) throw new Error(`setting ${alt} is not prompted`);
    this.pays.set(alt, clampPay(value));
  }

  /** The one-click max vote: full willingness-to-pay on both prompts. */
  maxVote(): void {
    for (const alt of this.alternatives()) this.pays.set(alt, LAMBDA_MAX);
  }

  /** Restore form state from a previously submitted ballot. */
  loadWire(wire: BallotWire): void {
    this.setPreferred(wire.preferred);
    for (const [alt, pay] of Object.entries(wire.pay_vs)) {
      this.setPay(Number(alt), pay);
    }
  }

  toWire(): BallotWire {
    const pay_vs: Record<string, number> = {};
    for (const alt of this.alternatives()) pay_vs[String(alt)] = this.payFor(alt);
    return { preferred: this.preferredIndex, pay_vs };
  }
}
