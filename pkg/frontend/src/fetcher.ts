import type { LayerQuery } from "./api";
import type { FeatureCollection, LayerKey, Scenario } from "./contract";

export interface LayerDoc {
  layer: LayerKey;
  scenario: Scenario;
  doc: FeatureCollection;
}

type FetchLayer = (layer: LayerKey, q: LayerQuery) => Promise<FeatureCollection>;

/**
 * Issues layer fetches and applies results last-write-wins per layer.
 *
 * The user can flip scenarios faster than responses arrive; whichever
 * request was issued most recently for a layer is the only one allowed to
 * land, regardless of completion order. The guard is keyed by
 * (layer, scenario): a completion only applies while the layer's current
 * request is still for the same scenario. Errors follow the same rule, so
 * a failure of an abandoned request never raises a banner.
 */
export class LayerFetcher {
  private seq = 0;
  private current = new Map<LayerKey, { token: number; scenario: Scenario }>();

  constructor(
    private readonly fetchLayer: FetchLayer,
    private readonly onDoc: (d: LayerDoc) => void,
    private readonly onError: (layer: LayerKey, err: Error) => void,
  ) {}

  request(layer: LayerKey, q: LayerQuery): Promise<void> {
    this.seq += 1;
    const token = this.seq;
    this.current.set(layer, { token, scenario: q.scenario });
    return this.fetchLayer(layer, q).then(
      (doc) => {
        const cur = this.current.get(layer);
        if (!cur || cur.token !== token || cur.scenario !== q.scenario) return;
        this.onDoc({ layer, scenario: q.scenario, doc });
      },
      (err: unknown) => {
        const cur = this.current.get(layer);
        if (!cur || cur.token !== token) return;
        this.onError(layer, err instanceof Error ? err : new Error(String(err)));
      },
    );
  }

  /** Forget a layer; any in-flight completion for it is dropped. */
  drop(layer: LayerKey): void {
    this.current.delete(layer);
  }
}
