// View state: the latest snapshot plus overlay toggles and connection
// status. The console never accumulates simulation state of its own, so
// closing and reopening reproduces the same picture from the next frame;
// snapshot ingestion is latest-wins.

import { Hello, Snapshot, schemaCompatible } from "./protocol.js";

export type Connection = "connecting" | "connected" | "disconnected";

export interface Overlays {
  truth: boolean;
  estimate: boolean;
  ellipses: boolean;
  trails: boolean;
  lbl: boolean;
}

export class ViewModel {
  snapshot: Snapshot | null = null;
  connection: Connection = "connecting";
  schemaMismatch = false;
  selectedVehicle: string | null = null;
  overlays: Overlays = { truth: true, estimate: true, ellipses: true, trails: true, lbl: false };

  onChange: (() => void) | null = null;

  ingestHello(hello: Hello): void {
    this.schemaMismatch = !schemaCompatible(hello);
    this.notify();
  }

  ingestSnapshot(snapshot: Snapshot): void {
    if (this.schemaMismatch) return; // banner shown, stop consuming
    if (!schemaCompatible(snapshot)) {
      this.schemaMismatch = true;
      this.notify();
      return;
    }
    this.snapshot = snapshot; // latest wins
    if (this.selectedVehicle === null) {
      const names = Object.keys(snapshot.vehicles);
      this.selectedVehicle = names.length ? names[0] : null;
    }
    this.notify();
  }

  setConnection(state: Connection): void {
    this.connection = state;
    this.notify();
  }

  vehicleNames(): string[] {
    return this.snapshot ? Object.keys(this.snapshot.vehicles).sort() : [];
  }

  private notify(): void {
    if (this.onChange) this.onChange();
  }
}
