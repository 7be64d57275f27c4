import { buildScene, type Scene, type Viewport } from "./netview.js";
import type { GenerationRecord, SessionState } from "./types.js";

export interface Series {
  generation: number[];
  fitness: number[];
  cost: number[];
  pleiotropy: number[];
  redundancy: number[];
  converged: boolean[];
}

export function emptySeries(): Series {
  return { generation: [], fitness: [], cost: [], pleiotropy: [], redundancy: [], converged: [] };
}

/** Outcome of offering a record to the store. 'gap' means the store refused
 * it: series stay contiguous, the caller must backfill from the records
 * endpoint and try again. */
export type Applied = "appended" | "stale" | "gap";

export interface PendingPatch {
  fields: Record<string, number>;
  sentAtGeneration: number;
}

const NETWORK_VIEW: Viewport = { width: 560, height: 560, pad: 28 };

/**
 * The single view model. Every protocol response is folded in through one
 * of the apply methods; series arrays hold streamed values verbatim (no
 * rounding, no smoothing) and are contiguous in generation by construction.
 */
export class Store {
  session: SessionState | null = null;
  series: Series = emptySeries();
  scene: Scene | null = null;
  /** digest of the network the scene was built from */
  sceneDigest: string | null = null;
  banner: string | null = null;
  pending: PendingPatch | null = null;
  fieldErrors: Record<string, string> = {};

  private newestDigest: string | null = null;
  private listeners = new Set<() => void>();
  private view: Viewport;

  constructor(view: Viewport = NETWORK_VIEW) {
    this.view = view;
  }

  onChange(fn: () => void): () => void {
    this.listeners.add(fn);
    return () => this.listeners.delete(fn);
  }

  private emit(): void {
    for (const fn of this.listeners) fn();
  }

  /** generation the series expect next; 1 for an empty store */
  nextGeneration(): number {
    const gens = this.series.generation;
    const last = gens[gens.length - 1];
    return last === undefined ? 1 : last + 1;
  }

  /** displayed network lags the newest known record */
  get networkStale(): boolean {
    return this.newestDigest !== this.sceneDigest;
  }

  applyRecord(rec: GenerationRecord): Applied {
    const expected = this.nextGeneration();
    if (rec.generation < expected) return "stale";
    if (rec.generation > expected) return "gap";
    this.series.generation.push(rec.generation);
    this.series.fitness.push(rec.best_scores.fitness);
    this.series.cost.push(rec.best_scores.cost);
    this.series.pleiotropy.push(rec.best_scores.pleiotropy);
    this.series.redundancy.push(rec.best_scores.redundancy);
    this.series.converged.push(rec.converged);
    this.newestDigest = rec.best_network_digest;
    this.emit();
    return "appended";
  }

  /**
   * Fold a full session state in: session fields, the embedded latest
   * record (same contiguity rules as applyRecord), and the elite network
   * scene. The state document is an atomic server-side snapshot, so the
   * scene and its digest always describe the same generation. States older
   * than what is already displayed are dropped whole.
   */
  applyState(state: SessionState): Applied {
    if (this.session && state.current_generation < this.session.current_generation) {
      return "stale";
    }
    let folded: Applied = "stale";
    if (state.latest_record) {
      folded = this.applyRecord(state.latest_record);
      if (folded === "gap") return "gap";
    }
    this.session = state;
    try {
      this.scene = buildScene(state.elite_network, this.view);
      this.sceneDigest = state.latest_record ? state.latest_record.best_network_digest : null;
      if (state.latest_record) this.newestDigest = state.latest_record.best_network_digest;
      this.banner = null;
    } catch (err) {
      // keep the last good frame, surface the failure
      this.banner = err instanceof Error ? err.message : String(err);
    }
    if (this.pending && this.confirmed(this.pending.fields, state)) {
      this.pending = null;
    }
    this.emit();
    return folded;
  }

  private confirmed(fields: Record<string, number>, state: SessionState): boolean {
    const live = state.live_config as unknown as Record<string, number>;
    return Object.entries(fields).every(([k, v]) => live[k] === v);
  }

  beginPatch(fields: Record<string, number>): void {
    this.pending = { fields, sentAtGeneration: this.session?.current_generation ?? 0 };
    this.fieldErrors = {};
    this.emit();
  }

  patchRejected(errors: Record<string, string>): void {
    this.pending = null;
    this.fieldErrors = errors;
    this.emit();
  }

  setFieldErrors(errors: Record<string, string>): void {
    this.fieldErrors = errors;
    this.emit();
  }

  setBanner(message: string | null): void {
    this.banner = message;
    this.emit();
  }
}
