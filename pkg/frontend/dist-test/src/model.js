// View state: the latest snapshot plus overlay toggles and connection
// status. The console never accumulates simulation state of its own, so
// closing and reopening reproduces the same picture from the next frame;
// snapshot ingestion is latest-wins.
import { schemaCompatible } from "./protocol.js";
export class ViewModel {
    snapshot = null;
    connection = "connecting";
    schemaMismatch = false;
    selectedVehicle = null;
    overlays = { truth: true, estimate: true, ellipses: true, trails: true, lbl: false };
    onChange = null;
    ingestHello(hello) {
        this.schemaMismatch = !schemaCompatible(hello);
        this.notify();
    }
    ingestSnapshot(snapshot) {
        if (this.schemaMismatch)
            return; // banner shown, stop consuming
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
    setConnection(state) {
        this.connection = state;
        this.notify();
    }
    vehicleNames() {
        return this.snapshot ? Object.keys(this.snapshot.vehicles).sort() : [];
    }
    notify() {
        if (this.onChange)
            this.onChange();
    }
}
