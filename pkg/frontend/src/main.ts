import { MasClient } from "./api.js";
import { MasApp } from "./app.js";

// Same-origin by default; ?service=http://host:port points the static page
// at a store service running elsewhere.
const serviceUrl = new URLSearchParams(window.location.search).get("service") ?? "";

const root = document.getElementById("app");
if (!root) throw new Error("missing #app mount point");

const app = new MasApp(root, new MasClient(serviceUrl));
void app.boot();
